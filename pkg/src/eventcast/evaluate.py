"""Holdout splitting, confusion matrices and macro-averaged metrics."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .ingest import EncodedDataset
from .rng import substream


def split_indices(labels: np.ndarray, n_classes: int, test_fraction: float = 0.3,
                  seed: int = 0, class_names: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stratified (train_rows, test_rows); each class contributes ``round(fraction * n_c)`` test rows.

    Every present class keeps at least one row on each side. Both index
    arrays are ascending.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be strictly between 0 and 1")
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    test_mask = np.zeros(labels.size, dtype=bool)
    for c in range(n_classes):
        if counts[c] == 0:
            continue
        if counts[c] < 2:
            name = class_names[c] if class_names is not None else c
            raise DataError(f"class {name!r} has fewer than 2 rows")
        rows = np.flatnonzero(labels == c)
        n_test = math.floor(test_fraction * rows.size + 0.5)
        n_test = min(max(n_test, 1), rows.size - 1)
        rng = substream(seed, "split", c)
        test_mask[rows[rng.permutation(rows.size)[:n_test]]] = True
    return np.flatnonzero(~test_mask), np.flatnonzero(test_mask)


def stratified_split(dataset: EncodedDataset, test_fraction: float = 0.3,
                     seed: int = 0) -> tuple[EncodedDataset, EncodedDataset]:
    """Per-class shuffled holdout; row order within each partition follows the dataset."""
    tr, te = split_indices(dataset.labels, dataset.n_classes, test_fraction, seed, dataset.class_names)
    return dataset.take(tr), dataset.take(te)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows: true class, columns: predicted class
    class_names: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\predicted", *self.class_names])
        for name, row in zip(self.class_names, self.counts):
            w.writerow([name, *map(int, row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"class_names": list(self.class_names), "counts": self.counts.tolist()}


def confusion(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int,
              class_names: Sequence[str] | None = None) -> ConfusionMatrix:
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted")
    if t.size and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= n_classes):
        raise ValueError("class code out of range")
    counts = np.bincount(t * n_classes + p, minlength=n_classes * n_classes)
    names = tuple(class_names) if class_names is not None else tuple(str(i) for i in range(n_classes))
    return ConfusionMatrix(counts.reshape(n_classes, n_classes), names)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)
    train_wall_time: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_class"] = {k: asdict(v) for k, v in self.per_class.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "precision", "recall", "f1", "support"])
        for name, m in self.per_class.items():
            w.writerow([name, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}", m.support])
        w.writerow(["macro", f"{self.macro_precision:.6f}", f"{self.macro_recall:.6f}",
                    f"{self.macro_f1:.6f}", self.counts_total])
        return buf.getvalue()

    @property
    def counts_total(self) -> int:
        return sum(m.support for m in self.per_class.values())


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def metrics(cm: ConfusionMatrix) -> MetricReport:
    """One-vs-rest precision/recall/F1 per class, unweighted means, accuracy = trace / total.

    Macro means run over every class that occurs in the truth or the
    predictions; within such a class 0/0 is taken as 0. Classes absent from
    both carry no information and are reported but not averaged.
    """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(counts)
    per_class = {}
    for i, name in enumerate(cm.class_names):
        precision = _ratio(tp[i], counts[:, i].sum())
        recall = _ratio(tp[i], counts[i, :].sum())
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class[name] = ClassMetrics(precision, recall, f1, int(counts[i, :].sum()))
    present = (counts.sum(axis=0) + counts.sum(axis=1)) > 0
    vals = [m for m, keep in zip(per_class.values(), present) if keep]
    return MetricReport(
        accuracy=float(tp.sum() / total),
        macro_precision=float(np.mean([m.precision for m in vals])),
        macro_recall=float(np.mean([m.recall for m in vals])),
        macro_f1=float(np.mean([m.f1 for m in vals])),
        per_class=per_class,
    )


def evaluate(model, dataset: EncodedDataset) -> tuple[ConfusionMatrix, MetricReport]:
    pred = model.predict(dataset)
    cm = confusion(dataset.labels, pred, dataset.n_classes, dataset.class_names)
    return cm, metrics(cm)


@contextmanager
def stopwatch():
    """Yields a one-element list that receives the elapsed wall time in seconds."""
    box = [0.0]
    start = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = time.perf_counter() - start
