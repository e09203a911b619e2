"""Per-feature score tables shared by chi-squared selection and model importances."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SCALE_LO, SCALE_HI = 0.1, 0.9


def scale_scores(scores: Sequence[float]) -> np.ndarray:
    """Min-max map scores onto [0.1, 0.9]; a constant column maps to 0.5."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        return s
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.full(s.shape, 0.5)
    scaled = SCALE_LO + (SCALE_HI - SCALE_LO) * (s - lo) / (hi - lo)
    # pin the endpoints exactly; interior scores that round onto an endpoint
    # move one ulp inward so the extremes stay unique
    scaled[(s > lo) & (scaled <= SCALE_LO)] = np.nextafter(SCALE_LO, 1.0)
    scaled[(s < hi) & (scaled >= SCALE_HI)] = np.nextafter(SCALE_HI, 0.0)
    scaled[s == hi] = SCALE_HI
    scaled[s == lo] = SCALE_LO
    return scaled


def rank_scores(scores: Sequence[float]) -> np.ndarray:
    """1-based ranks, highest score first; ties keep column order."""
    s = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(s.size), -s))
    ranks = np.empty(s.size, dtype=np.int64)
    ranks[order] = np.arange(1, s.size + 1)
    return ranks


@dataclass(frozen=True)
class FeatureScoreTable:
    names: tuple[str, ...]
    scores: np.ndarray
    scaled: np.ndarray
    ranks: np.ndarray
    flagged: tuple[str, ...] = ()

    @classmethod
    def from_scores(cls, names: Sequence[str], scores: Sequence[float],
                    flagged: Sequence[str] = ()) -> "FeatureScoreTable":
        s = np.asarray(scores, dtype=np.float64)
        return cls(tuple(names), s, scale_scores(s), rank_scores(s), tuple(flagged))

    def top(self, k: int) -> list[str]:
        order = np.argsort(self.ranks, kind="stable")
        return [self.names[i] for i in order[:k]]

    def score_of(self, name: str) -> float:
        return float(self.scores[self.names.index(name)])

    def to_csv(self, score_header: str = "K-Best Score") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Feature", score_header, "Softmax", "Rank"])
        for name, s, sc, r in zip(self.names, self.scores, self.scaled, self.ranks):
            w.writerow([name, f"{s:.2f}", f"{sc:.3f}", int(r)])
        return buf.getvalue()
