"""Random under/over-sampling for imbalanced training partitions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .ingest import EncodedDataset
from .rng import substream

MODES = ("none", "under", "over", "hybrid")


@dataclass(frozen=True)
class ResamplePlan:
    mode: str = "none"
    majority_cap_ratio: float = 5.0
    minority_target_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"resample.mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "none":
            return
        if not self.majority_cap_ratio >= 1:
            raise ConfigError("resample.majority_cap_ratio must be >= 1")
        if not 0 <= self.minority_target_ratio <= 1:
            raise ConfigError("resample.minority_target_ratio must be within [0, 1]")


def _present_counts(dataset: EncodedDataset) -> np.ndarray:
    counts = dataset.class_counts()
    if np.count_nonzero(counts) < 2:
        raise DataError("resampling needs at least two classes present")
    return counts


def undersample(dataset: EncodedDataset, plan: ResamplePlan) -> EncodedDataset:
    """Cap each class at ``floor(cap * rarest_count)`` rows, sampled without replacement.

    Kept rows stay in their original order.
    """
    if plan.mode not in ("under", "hybrid"):
        raise ConfigError(f"undersample called with mode {plan.mode!r}")
    counts = _present_counts(dataset)
    cap = math.floor(plan.majority_cap_ratio * counts[counts > 0].min())
    rng = substream(plan.seed, "undersample")
    keep = np.ones(dataset.n_rows, dtype=bool)
    for c in range(dataset.n_classes):
        if counts[c] <= cap:
            continue
        rows = np.flatnonzero(dataset.labels == c)
        chosen = rng.choice(rows.size, size=cap, replace=False)
        mask = np.zeros(rows.size, dtype=bool)
        mask[chosen] = True
        keep[rows[~mask]] = False
    return dataset.take(np.flatnonzero(keep))


def oversample(dataset: EncodedDataset, plan: ResamplePlan) -> EncodedDataset:
    """Pad every class up to ``ceil(target * majority_count)`` rows with duplicates of its own rows.

    The originals come first, followed by the duplicates class by class.
    """
    if plan.mode not in ("over", "hybrid"):
        raise ConfigError(f"oversample called with mode {plan.mode!r}")
    counts = _present_counts(dataset)
    goal = math.ceil(plan.minority_target_ratio * counts.max())
    rng = substream(plan.seed, "oversample")
    extra = []
    for c in range(dataset.n_classes):
        need = goal - int(counts[c])
        if need <= 0:
            continue
        rows = np.flatnonzero(dataset.labels == c)
        if rows.size == 0:
            raise DataError(f"class {dataset.class_names[c]!r} has no rows to duplicate")
        extra.append(rows[rng.integers(0, rows.size, size=need)])
    if not extra:
        return dataset
    return dataset.take(np.concatenate([np.arange(dataset.n_rows)] + extra))


def resample(dataset: EncodedDataset, plan: ResamplePlan) -> EncodedDataset:
    if plan.mode == "none":
        return dataset
    if plan.mode in ("under", "hybrid"):
        dataset = undersample(dataset, plan)
    if plan.mode in ("over", "hybrid"):
        dataset = oversample(dataset, plan)
    return dataset
