"""Synthetic flow-record CSVs with a planted, exactly analysable class signal.

Generative model, per row:

* the class ``c`` is drawn with prior proportional to ``1 / (c + 1)``
  (class 0 dominates, like benign traffic does);
* each of five signal features independently copies the class template
  ``t_f(c)`` with probability ``FIDELITY`` and otherwise takes a uniform
  value from its alphabet ``A_f``:

  ======  =============================  ==========================
  column  alphabet                       template
  ======  =============================  ==========================
  proto   tcp udp icmp arp ospf          ``c mod 5``
  state   FIN INT CON REQ                ``c mod 4``
  sbytes  decade 10^1 .. 10^6            ``c mod 6``
  dur     decade 10^-4 .. 10^0           ``(c + 2) mod 5``
  sttl    31 62 254 29                   ``(c + 1) mod 4``
  ======  =============================  ==========================

* ``service``, ``dbytes``, ``spkts``, ``rate`` and the two address columns
  are noise.

Continuous columns only carry signal through their decade, which the
log/sig discretization exposes. Because the likelihood factorizes over a
small finite alphabet, :func:`bayes_optimal_accuracy` computes the best
achievable accuracy exactly; it is above 0.93 for every supported class
count (2..10).
"""
from __future__ import annotations

import csv
import io
import itertools
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .rng import substream

CLASS_NAMES = ("Normal", "Generic", "Exploits", "Fuzzers", "DoS", "Reconnaissance", "Analysis",
               "Backdoor", "Shellcode", "Worms")
LABEL = "attack_cat"
HEADER = ["srcip", "dstip", "proto", "service", "state", "dur", "sbytes", "dbytes", "sttl", "spkts",
          "rate", LABEL]
FIDELITY = 0.75
MIN_PER_CLASS = 5

PROTOS = ("tcp", "udp", "icmp", "arp", "ospf")
STATES = ("FIN", "INT", "CON", "REQ")
SBYTES_DECADES = (1, 2, 3, 4, 5, 6)
DUR_DECADES = (-4, -3, -2, -1, 0)
TTLS = (31, 62, 254, 29)
SERVICES = ("-", "http", "dns", "ftp", "smtp")

ALPHABET_SIZES = (len(PROTOS), len(STATES), len(SBYTES_DECADES), len(DUR_DECADES), len(TTLS))
_TEMPLATE_SHIFT = (0, 0, 0, 2, 1)


def templates(n_classes: int) -> np.ndarray:
    """(n_classes, 5) alphabet index of each class's planted value per signal feature."""
    c = np.arange(n_classes)[:, None]
    return (c + np.array(_TEMPLATE_SHIFT)) % np.array(ALPHABET_SIZES)


def class_priors(n_classes: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n_classes + 1)
    return w / w.sum()


def _check(n_rows: int, n_classes: int) -> None:
    if not 2 <= n_classes <= len(CLASS_NAMES):
        raise ConfigError(f"n_classes must be within 2..{len(CLASS_NAMES)}")
    if n_rows < 10 * n_classes:
        raise ConfigError(f"n_rows must be >= 10 * n_classes = {10 * n_classes}")


def class_counts(n_rows: int, n_classes: int) -> np.ndarray:
    counts = np.maximum(np.floor(n_rows * class_priors(n_classes)).astype(np.int64), MIN_PER_CLASS)
    counts[0] += n_rows - counts.sum()
    return counts


def bayes_optimal_accuracy(n_classes: int, priors: np.ndarray | None = None,
                           fidelity: float = FIDELITY) -> float:
    """Exact accuracy of the Bayes classifier on the signal features: sum_x max_c P(c) P(x | c)."""
    priors = class_priors(n_classes) if priors is None else np.asarray(priors, dtype=float)
    tmpl = templates(n_classes)
    total = 0.0
    for x in itertools.product(*(range(a) for a in ALPHABET_SIZES)):
        lik = priors.copy()
        for f, a in enumerate(ALPHABET_SIZES):
            lik = lik * (fidelity * (tmpl[:, f] == x[f]) + (1 - fidelity) / a)
        total += lik.max()
    return float(total)


def _signal_indices(rng: np.random.Generator, labels: np.ndarray, n_classes: int,
                    fidelity: float) -> np.ndarray:
    tmpl = templates(n_classes)[labels]
    out = np.empty_like(tmpl)
    for f, a in enumerate(ALPHABET_SIZES):
        keep = rng.random(labels.size) < fidelity
        out[:, f] = np.where(keep, tmpl[:, f], rng.integers(0, a, size=labels.size))
    return out


def synth_rows(n_rows: int, n_classes: int, seed: int) -> list[list[str]]:
    """Data rows (header excluded) as strings, shuffled; deterministic in ``seed``."""
    _check(n_rows, n_classes)
    rng = substream(seed, "synth")
    labels = np.repeat(np.arange(n_classes), class_counts(n_rows, n_classes))
    labels = labels[rng.permutation(n_rows)]
    sig = _signal_indices(rng, labels, n_classes, FIDELITY)

    # leading parts in [1, 9.99] keep each value inside its decade after formatting
    lead_sb = rng.uniform(1.0, 9.99, n_rows)
    lead_dur = rng.uniform(1.0, 9.99, n_rows)
    sbytes = np.floor(lead_sb * 10.0 ** np.take(SBYTES_DECADES, sig[:, 2])).astype(np.int64)
    dur = lead_dur * 10.0 ** np.take(DUR_DECADES, sig[:, 3]).astype(float)
    dbytes = np.floor(rng.uniform(1.0, 9.99, n_rows) * 10.0 ** rng.integers(0, 6, n_rows)).astype(np.int64)
    dbytes[rng.random(n_rows) < 0.1] = 0
    spkts = rng.integers(1, 200, n_rows)
    rate = rng.uniform(0.0, 1e5, n_rows)
    service = rng.integers(0, len(SERVICES), n_rows)
    src = rng.integers(0, 256, (n_rows, 2))
    dst = rng.integers(0, 256, (n_rows, 2))

    rows = []
    for i in range(n_rows):
        rows.append([
            f"10.0.{src[i, 0]}.{src[i, 1]}",
            f"10.1.{dst[i, 0]}.{dst[i, 1]}",
            PROTOS[sig[i, 0]],
            SERVICES[service[i]],
            STATES[sig[i, 1]],
            f"{dur[i]:.6g}",
            str(sbytes[i]),
            str(dbytes[i]),
            str(TTLS[sig[i, 4]]),
            str(spkts[i]),
            f"{rate[i]:.4f}",
            CLASS_NAMES[labels[i]],
        ])
    return rows


def synth_csv(n_rows: int, n_classes: int, seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    w.writerows(synth_rows(n_rows, n_classes, seed))
    return buf.getvalue()


def write_synth(path: str | Path, n_rows: int = 4000, n_classes: int = 6, seed: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(synth_csv(n_rows, n_classes, seed), encoding="utf-8")
    return path
