"""Acceptance suite: one PASS / FAIL / SKIP line per criterion.

Criteria 1, 2, 4 and 5 need the public UNSW-NB15 train/test CSVs; point
``EVENTCAST_UNSW_DIR`` at the directory holding
``UNSW_NB15_training-set.csv`` and ``UNSW_NB15_testing-set.csv``.
``EVENTCAST_UNSW_TUNE=1`` adds the hyper-parameter grid to criterion 1.
Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live;
they are also printed under plain ``pytest -v``.
"""
from __future__ import annotations

import csv
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from eventcast.evaluate import confusion, metrics
from eventcast.event_space import extract_domains, forecast, total_variation
from eventcast.feature_select import chi2_scores, kbest_sweep, overlap, scale_scores
from eventcast.learners import LearnerParams, softmax_grad_hess, train, train_gbt, train_tree
from eventcast.resample import ResamplePlan, resample
from conftest import DATA_DIR, WALL_CLOCK, artifacts, make_ds, quiet, random_ds
from oracles import chi2_oracle, confusion_oracle, metrics_oracle, softmax_loss

UNSW_ENV = "EVENTCAST_UNSW_DIR"
TRAIN_CSV = "UNSW_NB15_training-set.csv"
TEST_CSV = "UNSW_NB15_testing-set.csv"

TOP10_REFERENCE = ["ct dst sport ltm", "ct srv dst", "ct src dport ltm", "ct srv src", "ct dst src ltm",
                   "ct dst ltm", "dload log", "ct src ltm", "sttl", "state"]
REDUCED_SIZE_REFERENCE = 4.33e51


def emit(capsys, n: int, status: str, detail: str) -> None:
    with capsys.disabled():
        print(f"\nACCEPTANCE {n}: {status} - {detail}")


def verdict(capsys, n: int, ok: bool, detail: str) -> None:
    emit(capsys, n, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def skip(capsys, n: int, reason: str) -> None:
    emit(capsys, n, "SKIP", reason)
    pytest.skip(reason)


def norm(name: str) -> str:
    return name.replace("_", " ").strip().lower()


# ---------------------------------------------------------------- UNSW run (criteria 1, 2, 4, 5)

def _unsw_dir() -> Path | None:
    d = os.environ.get(UNSW_ENV)
    if not d:
        return None
    p = Path(d)
    return p if (p / TRAIN_CSV).is_file() and (p / TEST_CSV).is_file() else None


@pytest.fixture(scope="module")
def unsw_run(tmp_path_factory):
    d = _unsw_dir()
    if d is None:
        return None
    from eventcast.config import load_config
    from eventcast.pipeline import cmd_preprocess, cmd_train
    out = tmp_path_factory.mktemp("unsw")
    cfg = load_config(None, {
        "dataset.path": str(d / TRAIN_CSV), "dataset.test_path": str(d / TEST_CSV),
        "dataset.schema": "unsw-nb15", "output_dir": str(out), "learner.learners": ["gbt"],
        "learner.tune": os.environ.get("EVENTCAST_UNSW_TUNE") == "1", "selection.k": 34,
    })
    start = time.perf_counter()
    cmd_preprocess(cfg, quiet)
    summary = cmd_train(cfg, quiet)
    return {"cfg": cfg, "summary": summary, "seconds": time.perf_counter() - start}


def _need_unsw(capsys, n: int, run) -> None:
    if run is None:
        skip(capsys, n, f"UNSW-NB15 CSVs not found (set {UNSW_ENV})")


def test_criterion_1_table2_unsw(capsys, unsw_run):
    _need_unsw(capsys, 1, unsw_run)
    processed = next(v for v in unsw_run["summary"]["variants"] if v["variant"] == "processed")
    acc, f1, secs = processed["accuracy"], processed["macro_f1"], unsw_run["seconds"]
    ok = 0.85 <= acc <= 0.91 and 0.58 <= f1 <= 0.70 and secs < 15 * 60
    verdict(capsys, 1, ok, f"gbt accuracy {acc:.4f} (want 0.85..0.91), macro F1 {f1:.4f} "
                           f"(want 0.58..0.70), wall {secs:.0f}s (want < 900s)")


def test_criterion_2_table6_shape(capsys, unsw_run):
    _need_unsw(capsys, 2, unsw_run)
    from eventcast.preprocess import load_dataset
    cfg = unsw_run["cfg"]
    train_ds = load_dataset(cfg.out / "data" / "processed_train")
    test_ds = load_dataset(cfg.out / "data" / "processed_test")
    params = LearnerParams.from_dict(unsw_run["summary"]["params"])
    rows = {r.k: r for r in kbest_sweep(train_ds, test_ds, params, [5, 34], workers=cfg.workers)}
    a34, a5 = rows[34].accuracy, rows[5].accuracy
    ok = abs(a34 - 0.881) <= 0.04 and abs(a5 - 0.792) <= 0.05 and a34 > a5
    verdict(capsys, 2, ok, f"k=34 accuracy {a34:.4f} (0.881 +/- 0.04), k=5 accuracy {a5:.4f} "
                           f"(0.792 +/- 0.05), k=34 > k=5: {a34 > a5}")


def test_criterion_4_table5_ranking(capsys, unsw_run):
    _need_unsw(capsys, 4, unsw_run)
    from eventcast.preprocess import load_dataset
    train_ds = load_dataset(unsw_run["cfg"].out / "data" / "processed_train")
    top = chi2_scores(train_ds).top(10)
    hits = overlap(top, TOP10_REFERENCE)
    first = norm(top[0])
    ok = first == "ct dst sport ltm" and hits >= 7
    verdict(capsys, 4, ok, f"first {first!r} (want 'ct dst sport ltm'), {hits}/10 of the reference "
                           f"top-10 in the computed top-10 (want >= 7)")


def test_criterion_5_event_space_size(capsys, unsw_run):
    _need_unsw(capsys, 5, unsw_run)
    reduced = next(v for v in unsw_run["summary"]["variants"] if v["variant"] == "reduced")
    size = int(reduced["space_size"])
    orders = abs(math.log10(size) - math.log10(REDUCED_SIZE_REFERENCE))
    verdict(capsys, 5, orders <= 10, f"{reduced['features']}-feature space {reduced['space_size_sci']} is "
                                     f"{orders:.2f} orders from 4.33e+51 (want <= 10)")


# ---------------------------------------------------------------- criterion 3

def test_criterion_3_table5_scaling(capsys):
    with open(DATA_DIR / "unsw_chi2_reference.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    got = scale_scores([float(r["score"]) for r in rows])
    dev = [abs(g - float(r["scaled"])) for g, r in zip(got, rows)]
    bad = [r["feature"] for r, d in zip(rows, dev) if d > 0.005]
    ok = len(rows) == 60 and not bad
    verdict(capsys, 3, ok, f"{len(rows) - len(bad)}/{len(rows)} "
                           f"rows within +/-0.005 (max deviation {max(dev):.4f})"
                           + (f"; off: {bad}" if bad else ""))


# ---------------------------------------------------------------- criterion 6

def _fixture_spaces():
    """(label, model, spec) triples; every space has at most 10^4 events."""
    rng = np.random.default_rng(2024)
    out = []
    for label, cards, learner, C in [
        ("6 events / tree", (2, 3), "tree", 2),
        ("120 events / nbayes", (4, 5, 6), "nbayes", 3),
        ("1000 events / gbt", (10, 10, 10), "gbt", 4),
        ("9600 events / gbt", (8, 10, 12, 10), "gbt", 5),
        ("10000 events / forest", (10, 10, 10, 10), "forest", 3),
    ]:
        X = np.column_stack([rng.integers(0, c, 3000) for c in cards])
        # labels depend on the features so forecasts are not trivially uniform
        y = (X.sum(axis=1) * 7 + X[:, 0]) % C
        noisy = rng.random(3000) < 0.2
        y[noisy] = rng.integers(0, C, noisy.sum())
        ds = make_ds(X, y, cards, class_names=[f"c{i}" for i in range(C)])
        params = LearnerParams(learner, n_rounds=20, n_trees=20, max_depth=4, seed=1)
        out.append((label, train(ds, params), extract_domains(ds)))
    return out


def test_criterion_6_sampling_fidelity(capsys):
    start = time.perf_counter()
    worst, lines = 0.0, []
    for label, model, spec in _fixture_spaces():
        assert spec.size <= 10**4
        exact = forecast(model, spec, 0.9)
        sampled = forecast(model, spec, 0.9, n=10**6, seed=17, limit=0)
        assert exact.mode == "exhaustive" and sampled.mode == "sampled"
        d = total_variation(exact.event_fraction, sampled.event_fraction)
        worst = max(worst, d)
        lines.append(f"{label}: {d:.5f}")
    secs = time.perf_counter() - start
    ok = worst <= 0.01 and secs < 60
    verdict(capsys, 6, ok, f"max TV {worst:.5f} (want <= 0.01) over {len(lines)} spaces "
                           f"[{'; '.join(lines)}], {secs:.1f}s (want < 60s)")


# ---------------------------------------------------------------- criterion 7

def _property_checks(pipeline_pair, synth_csv) -> dict[str, bool]:
    rng = np.random.default_rng(777)
    checks = {}

    ok = True
    for _ in range(100):
        C = int(rng.integers(2, 6))
        ds = random_ds(rng, int(rng.integers(20, 120)), int(rng.integers(1, 8)), C, max_card=9)
        want = chi2_oracle(ds.features.tolist(), ds.labels.tolist(), C)
        ok &= bool(np.allclose(chi2_scores(ds).scores, want, rtol=1e-9, atol=1e-12))
    checks["chi2 vs loop oracle (100 datasets)"] = ok

    ok = True
    for _ in range(100):
        C = int(rng.integers(2, 7))
        n = int(rng.integers(1, 300))
        t, p = rng.integers(0, C, n), rng.integers(0, C, n)
        cm = confusion(t, p, C)
        ok &= cm.counts.tolist() == confusion_oracle(t.tolist(), p.tolist(), C)
        r = metrics(cm)
        ok &= bool(np.allclose([r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1],
                               metrics_oracle(cm.counts.tolist())))
    checks["confusion/metrics vs oracles"] = ok

    ok = True
    eps = 1e-5
    for _ in range(200):
        C = int(rng.integers(2, 8))
        s = rng.normal(0, 3, (1, C))
        y = np.array([int(rng.integers(0, C))])
        g, h = softmax_grad_hess(s, y)
        for k in range(C):
            up, dn = s.copy(), s.copy()
            up[0, k] += eps
            dn[0, k] -= eps
            fd_g = (softmax_loss(up[0], y[0]) - softmax_loss(dn[0], y[0])) / (2 * eps)
            fd_h = (softmax_grad_hess(up, y)[0][0, k] - softmax_grad_hess(dn, y)[0][0, k]) / (2 * eps)
            ok &= math.isclose(g[0, k], fd_g, rel_tol=1e-6, abs_tol=1e-9)
            ok &= math.isclose(h[0, k], fd_h, rel_tol=1e-6, abs_tol=1e-9)
    checks["gbt gradient/hessian vs finite differences (1e-6)"] = ok

    from eventcast.preprocess import load_dataset
    fixtures = [load_dataset(pipeline_pair[0] / "data" / "processed_train")]
    fixtures += [random_ds(rng, 500, 6, C) for C in (2, 3, 5)]
    ok = True
    for ds in fixtures:
        losses = train_gbt(ds, LearnerParams("gbt", n_rounds=30)).train_loss
        ok &= bool(np.all(np.diff(losses) <= 1e-12))
    checks["gbt train log-loss non-increasing"] = ok

    X = np.array([[a, b] for a in range(2) for b in range(2) for _ in range(3)])
    y = X[:, 0] ^ X[:, 1]
    xor = make_ds(X, y)
    tree = train_tree(xor, LearnerParams("tree", max_depth=2, min_child_weight=0))
    checks["tree solves threshold-XOR"] = bool(np.array_equal(tree.predict(xor), y)) and tree.tree.depth == 2

    ok = True
    for i in range(100):
        counts = rng.integers(1, 40, int(rng.integers(2, 6)))
        yy = np.repeat(np.arange(counts.size), counts)
        ds = make_ds(np.column_stack([np.arange(yy.size), yy]), yy)
        src = {tuple(r) for r in ds.features.tolist()}
        for mode in ("under", "over", "hybrid"):
            plan = ResamplePlan(mode, float(rng.uniform(1, 5)), float(rng.uniform(0, 1)), seed=i)
            a, b = resample(ds, plan), resample(ds, plan)
            rows = [tuple(r) for r in a.features.tolist()]
            ok &= set(rows) <= src and np.array_equal(a.features, b.features)
            ok &= all(r[1] == lbl for r, lbl in zip(rows, a.labels.tolist()))
            if mode == "over":
                ok &= src <= set(rows)
            if mode == "under":
                ok &= len(rows) == len(set(rows))
            other = resample(ds, ResamplePlan(mode, plan.majority_cap_ratio, plan.minority_target_ratio,
                                              seed=i + 1000))
            ok &= other.class_counts().tolist() == a.class_counts().tolist()
    checks["resampler multiset invariants (100 datasets)"] = ok

    a, b = (artifacts(p) for p in pipeline_pair)
    checks["two full pipeline runs byte-identical"] = a.keys() == b.keys() and \
        all(a[k] == b[k] for k in a if k not in WALL_CLOCK)

    import json
    final = json.loads((pipeline_pair[0] / "train_report.json").read_text())
    gbt_acc = final["learners"]["gbt"]["accuracy"]
    checks[f"synthetic end-to-end gbt accuracy {gbt_acc:.3f} >= 0.85"] = gbt_acc >= 0.85 and \
        final["final"]["accuracy"] >= 0.85
    return checks


def test_criterion_7_property_suite(capsys, pipeline_pair, synth_csv):
    checks = _property_checks(pipeline_pair, synth_csv)
    failed = [k for k, v in checks.items() if not v]
    verdict(capsys, 7, not failed, f"{len(checks) - len(failed)}/{len(checks)} checks hold"
                                   + (f"; failed: {failed}" if failed else ""))


# ---------------------------------------------------------------- criterion 8

def test_criterion_8_exclusions(capsys):
    skip(capsys, 8, "excluded by design: absolute training times of the timing tables are "
                    "hardware-bound (reported in timings.csv, not asserted); the RFE table duplicates "
                    "the k-best table, so RFE is covered by property tests; CICIDS-17 runs are optional")
