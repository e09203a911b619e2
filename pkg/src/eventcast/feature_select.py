"""Chi-squared scoring, k-best selection and feature-count sweeps."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .evaluate import evaluate
from .ingest import EncodedDataset
from .learners import LearnerParams, train
from .scoring import FeatureScoreTable, rank_scores, scale_scores

__all__ = [
    "FeatureScoreTable", "SweepRow", "chi2_scores", "kbest_sweep", "rfe_sweep", "scale_scores",
    "select_k_best", "sweep_to_csv", "rank_scores",
]

SWEEP_HEADER = ["k", "accuracy", "precision", "recall", "f1"]


def _frequency_chi2(X: np.ndarray, y: np.ndarray, n_classes: int) -> np.ndarray:
    X = X.astype(np.float64)
    observed = np.zeros((n_classes, X.shape[1]))
    for c in range(n_classes):
        observed[c] = X[y == c].sum(axis=0)
    freq = np.bincount(y, minlength=n_classes) / len(y)
    expected = freq[:, None] * observed.sum(axis=0)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / np.where(expected > 0, expected, 1), 0.0)
    return terms.sum(axis=0)


def _contingency_chi2(ds: EncodedDataset) -> np.ndarray:
    n = ds.n_rows
    out = np.zeros(ds.n_features)
    for j, m in enumerate(ds.feature_meta):
        table = np.zeros((ds.n_classes, m.cardinality + 1))
        np.add.at(table, (ds.labels, ds.features[:, j]), 1.0)
        expected = table.sum(axis=1, keepdims=True) * table.sum(axis=0, keepdims=True) / n
        nz = expected > 0
        out[j] = ((table[nz] - expected[nz]) ** 2 / expected[nz]).sum()
    return out


def chi2_scores(dataset: EncodedDataset, method: str = "frequency") -> FeatureScoreTable:
    """Score each feature against the class labels.

    ``frequency`` (default) treats feature codes as counts: per class,
    O_c = sum of the feature over that class's rows and
    E_c = (n_c / n) * sum_c O_c, giving sum_c (O_c - E_c)^2 / E_c.
    ``contingency`` is the classic class-by-code independence test.
    Features that are zero on every row score 0 and are flagged.
    """
    if not dataset.is_discrete:
        raise DataError("chi2 scoring needs discrete features")
    if np.count_nonzero(dataset.class_counts()) < 2:
        raise DataError("chi2 scoring needs at least two classes")
    if method == "frequency":
        scores = _frequency_chi2(dataset.features, dataset.labels, dataset.n_classes)
    elif method == "contingency":
        scores = _contingency_chi2(dataset)
    else:
        raise ValueError(f"unknown chi2 method {method!r}")
    flagged = [m.name for j, m in enumerate(dataset.feature_meta)
               if not np.any(dataset.features[:, j])]
    return FeatureScoreTable.from_scores(dataset.feature_names, scores, flagged)


def select_k_best(dataset: EncodedDataset, k: int,
                  scores: FeatureScoreTable | None = None) -> EncodedDataset:
    """Keep the ``k`` highest-scoring features, in their original column order."""
    if not 1 <= k <= dataset.n_features:
        raise ValueError(f"k must be within 1..{dataset.n_features}, got {k}")
    if scores is None:
        scores = chi2_scores(dataset)
    if list(scores.names) != dataset.feature_names:
        raise DataError("score table does not match dataset features")
    keep = sorted(np.flatnonzero(scores.ranks <= k).tolist())
    return dataset.select_features(keep)


@dataclass(frozen=True)
class SweepRow:
    k: int
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_list(self) -> list:
        return [self.k, f"{self.accuracy:.6f}", f"{self.precision:.6f}",
                f"{self.recall:.6f}", f"{self.f1:.6f}"]


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def _fit_eval(train_ds: EncodedDataset, test_ds: EncodedDataset, params: LearnerParams):
    model = train(train_ds, params)
    _, report = evaluate(model, test_ds)
    return model, report


def _row(k: int, report) -> SweepRow:
    return SweepRow(k, report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1)


def kbest_sweep(train_ds: EncodedDataset, test_ds: EncodedDataset, params: LearnerParams,
                k_range: Iterable[int], workers: int = 1) -> list[SweepRow]:
    """Train and evaluate on the top-k chi2 features for each k (scores from the training data)."""
    scores = chi2_scores(train_ds)
    ks = list(k_range)
    for k in ks:
        if not 1 <= k <= train_ds.n_features:
            raise ValueError(f"k={k} outside 1..{train_ds.n_features}")

    def job(k: int) -> SweepRow:
        tr = select_k_best(train_ds, k, scores)
        te = test_ds.select_named(tr.feature_names)
        return _row(k, _fit_eval(tr, te, params)[1])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, ks))
    return [job(k) for k in ks]


def rfe_sweep(train_ds: EncodedDataset, test_ds: EncodedDataset, params: LearnerParams,
              step: int = 1, min_features: int = 5) -> tuple[list[str], list[SweepRow]]:
    """Recursive elimination by model importance.

    Each pass trains on the surviving features, records holdout metrics,
    then drops the ``step`` least important (ties: earlier column first)
    until ``min_features`` remain. The returned order lists every feature,
    eliminated ones first, survivors last in ascending final importance.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    floor = max(1, min(min_features, train_ds.n_features))
    current = list(train_ds.feature_names)
    eliminated: list[str] = []
    rows: list[SweepRow] = []
    while True:
        tr = train_ds.select_named(current)
        model, report = _fit_eval(tr, test_ds.select_named(current), params)
        rows.append(_row(len(current), report))
        imp = model.importances()
        ascending = sorted(range(len(current)), key=lambda i: (imp[i], i))
        if len(current) <= floor:
            eliminated.extend(current[i] for i in ascending)
            break
        n_drop = min(step, len(current) - floor)
        drop = set(ascending[:n_drop])
        eliminated.extend(current[i] for i in ascending[:n_drop])
        current = [name for i, name in enumerate(current) if i not in drop]
    return eliminated, rows


def overlap(a: Sequence[str], b: Sequence[str]) -> int:
    """Size of the intersection of two feature-name lists, ignoring case and ``_`` vs space."""
    norm = lambda s: s.replace("_", " ").strip().lower()
    return len({norm(x) for x in a} & {norm(x) for x in b})
