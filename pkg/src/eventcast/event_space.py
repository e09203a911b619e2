"""Cartesian event space over selected feature domains, and class forecasts over it."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError
from .ingest import EncodedDataset
from .rng import substream

DEFAULT_LIMIT = 10**7
DEFAULT_SAMPLES = 10**6
BLOCK = 1 << 16  # events per sampling block; each block has its own seeded substream
UNIFORM, EMPIRICAL = "uniform", "empirical"


@dataclass(frozen=True)
class EventSpaceSpec:
    names: tuple[str, ...]
    domains: tuple[np.ndarray, ...]   # sorted observed codes per feature
    weights: tuple[np.ndarray, ...] | None = None  # observed code frequencies, for empirical sampling

    def __post_init__(self) -> None:
        if not self.names:
            raise DataError("event space needs at least one feature")
        if len(self.names) != len(self.domains):
            raise DataError("names and domains differ in length")
        if any(len(d) == 0 for d in self.domains):
            raise DataError("every feature domain must be nonempty")

    @property
    def size(self) -> int:
        """Exact number of events (arbitrary precision)."""
        return math.prod(len(d) for d in self.domains)

    @property
    def cardinalities(self) -> list[int]:
        return [len(d) for d in self.domains]

    def size_sci(self, digits: int = 2) -> str:
        return format_sci(self.size, digits)

    def add_feature(self, name: str, domain: Sequence[int]) -> "EventSpaceSpec":
        return EventSpaceSpec(self.names + (name,), self.domains + (np.asarray(sorted(domain)),))

    def reorder(self, names: Sequence[str]) -> "EventSpaceSpec":
        if sorted(names) != sorted(self.names):
            raise DataError("reorder needs the same feature set")
        pos = [self.names.index(n) for n in names]
        return EventSpaceSpec(tuple(names), tuple(self.domains[i] for i in pos),
                              tuple(self.weights[i] for i in pos) if self.weights else None)

    def to_dict(self) -> dict:
        d = {"names": list(self.names), "domains": [x.tolist() for x in self.domains]}
        if self.weights is not None:
            d["weights"] = [w.tolist() for w in self.weights]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EventSpaceSpec":
        weights = d.get("weights")
        return cls(tuple(d["names"]), tuple(np.asarray(x, dtype=np.int64) for x in d["domains"]),
                   tuple(np.asarray(w, dtype=np.float64) for w in weights) if weights else None)


def format_sci(n: int, digits: int = 2) -> str:
    """Scientific notation for an arbitrarily large nonnegative int, e.g. ``4.33e+51``."""
    if n == 0:
        return f"{0:.{digits}e}"
    s = str(n)
    exp = len(s) - 1
    mant = round(int(s[: digits + 2].ljust(digits + 2, "0")) / 10 ** (digits + 1), digits)
    if mant >= 10:
        mant /= 10
        exp += 1
    return f"{mant:.{digits}f}e+{exp:02d}"


def extract_domains(dataset: EncodedDataset, selected: Sequence[str] | None = None) -> EventSpaceSpec:
    """Observed code domain of each selected feature (all features when ``selected`` is None)."""
    names = list(dataset.feature_names if selected is None else selected)
    if not names:
        raise DataError("empty feature selection")
    domains, weights = [], []
    for name in names:
        if name not in dataset.feature_names:
            raise DataError(f"feature {name!r} not in dataset")
        col = dataset.column(name).astype(np.int64)
        values, counts = np.unique(col, return_counts=True)
        domains.append(values)
        weights.append(counts / counts.sum())
    return EventSpaceSpec(tuple(names), tuple(domains), tuple(weights))


def _event_chunk(spec: EventSpaceSpec, start: int, stop: int) -> np.ndarray:
    flat = np.arange(start, stop, dtype=np.int64)
    idx = np.unravel_index(flat, spec.cardinalities)
    return np.column_stack([d[i] for d, i in zip(spec.domains, idx)])


def enumerate_events(spec: EventSpaceSpec, limit: int = DEFAULT_LIMIT,
                     chunk: int = BLOCK) -> Iterator[np.ndarray]:
    """Every event exactly once, last feature varying fastest, in row chunks."""
    size = spec.size
    if size > limit:
        raise DataError(f"event space has {format_sci(size)} events (limit {limit}); sample instead")
    for start in range(0, size, chunk):
        yield _event_chunk(spec, start, min(start + chunk, size))


def _sample_block(spec: EventSpaceSpec, seed: int, block: int, n: int, marginals: str) -> np.ndarray:
    rng = substream(seed, "events", block)
    cols = []
    for j, d in enumerate(spec.domains):
        if marginals == EMPIRICAL:
            if spec.weights is None:
                raise DataError("empirical sampling needs observed code frequencies")
            cols.append(d[rng.choice(len(d), size=n, p=spec.weights[j])])
        else:
            cols.append(d[rng.integers(0, len(d), size=n)])
    return np.column_stack(cols)


def _block_sizes(n: int) -> list[int]:
    return [min(BLOCK, n - s) for s in range(0, n, BLOCK)]


def sample_events(spec: EventSpaceSpec, n: int, seed: int, marginals: str = UNIFORM) -> Iterator[np.ndarray]:
    """``n`` i.i.d. events in blocks; block ``b`` draws from substream ``(seed, "events", b)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if marginals not in (UNIFORM, EMPIRICAL):
        raise ValueError(f"unknown marginal mode {marginals!r}")
    for b, m in enumerate(_block_sizes(n)):
        yield _sample_block(spec, seed, b, m, marginals)


@dataclass
class AttackForecast:
    class_names: tuple[str, ...]
    counts: np.ndarray
    event_fraction: np.ndarray
    model_accuracy: float
    weighted: np.ndarray
    standard_error: np.ndarray
    sample_count: int
    mode: str
    space_size: int = 0
    marginals: str = UNIFORM
    extras: dict = field(default_factory=dict)

    @property
    def most_likely(self) -> str:
        return self.class_names[int(np.argmax(self.event_fraction))]

    def to_dict(self, full_size: bool = False) -> dict:
        d = {
            "mode": self.mode,
            "marginals": self.marginals,
            "sample_count": self.sample_count,
            "model_accuracy": self.model_accuracy,
            "space_size": format_sci(self.space_size),
            "most_likely": self.most_likely,
            "classes": [
                {"class": c, "count": int(n), "fraction": float(f), "weighted": float(w),
                 "stderr": float(se)}
                for c, n, f, w, se in zip(self.class_names, self.counts, self.event_fraction,
                                          self.weighted, self.standard_error)
            ],
        }
        if full_size:
            d["space_size_exact"] = str(self.space_size)
        d.update(self.extras)
        return d

    def to_json(self, full_size: bool = False) -> str:
        return json.dumps(self.to_dict(full_size), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "fraction", "weighted", "stderr"])
        for c, f, wt, se in zip(self.class_names, self.event_fraction, self.weighted,
                                self.standard_error):
            w.writerow([c, f"{f:.8f}", f"{wt:.8f}", f"{se:.8f}"])
        return buf.getvalue()


def _count_classes(model, X: np.ndarray) -> np.ndarray:
    return np.bincount(model.predict(X), minlength=model.n_classes)


def forecast(model, spec: EventSpaceSpec, accuracy: float, n: int = DEFAULT_SAMPLES, seed: int = 0,
             limit: int = DEFAULT_LIMIT, marginals: str = UNIFORM, workers: int = 1) -> AttackForecast:
    """Classify the event space: exhaustively when ``spec.size <= limit`` (uniform
    marginals only), otherwise on ``n`` sampled events.

    ``weighted`` is accuracy times the class fraction and is deliberately not
    renormalized. Per-block counts are summed in block order, so the result
    does not depend on ``workers``.
    """
    if not 0 <= accuracy <= 1:
        raise ValueError("accuracy must be within [0, 1]")
    if sorted(spec.names) != sorted(model.feature_names):
        raise DataError("event-space features do not match the model's features")
    # canonical coordinate order = model order, so results ignore the caller's feature order
    spec = spec.reorder(model.feature_names)

    # empirical marginals weight events unequally, so they always go through sampling
    exhaustive = spec.size <= limit and marginals == UNIFORM
    if exhaustive:
        mode = "exhaustive"
        size = spec.size
        jobs = [(s, min(s + BLOCK, size)) for s in range(0, size, BLOCK)]
        run = lambda job: _count_classes(model, _event_chunk(spec, *job))
    else:
        mode = "sampled"
        jobs = list(enumerate(_block_sizes(n)))
        run = lambda job: _count_classes(model, _sample_block(spec, seed, job[0], job[1], marginals))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    counts = np.zeros(model.n_classes, dtype=np.int64)
    for p in parts:
        counts += p
    total = int(counts.sum())
    fraction = counts / total
    if exhaustive:
        stderr = np.zeros(model.n_classes)
    else:
        stderr = np.sqrt(fraction * (1 - fraction) / total)
    return AttackForecast(
        class_names=tuple(model.class_names),
        counts=counts,
        event_fraction=fraction,
        model_accuracy=float(accuracy),
        weighted=accuracy * fraction,
        standard_error=stderr,
        sample_count=total,
        mode=mode,
        space_size=spec.size,
        marginals=marginals,
    )


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())
