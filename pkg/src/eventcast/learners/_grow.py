"""Histogram-based greedy tree growth over integer feature codes.

Rows go left when ``code <= threshold``. Each feature occupies a contiguous
segment of ``cardinality + 1`` histogram bins (the extra bin is the
reserved unseen-value code), so a single pass over a node's rows builds the
statistics for every feature at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

_MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray    # int32, -1 at leaves
    threshold: np.ndarray  # int32
    left: np.ndarray       # int32 child index, -1 at leaves
    right: np.ndarray
    value: np.ndarray      # float64 (n_nodes, k)
    gain: np.ndarray       # float64 split gain, 0 at leaves
    depth: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_splits(self) -> int:
        return int(np.count_nonzero(self.feature >= 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.maximum(f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        n = len(d["feature"])
        value = np.asarray(d["value"], dtype=np.float64).reshape(n, -1)
        return cls(
            np.asarray(d["feature"], dtype=np.int32),
            np.asarray(d["threshold"], dtype=np.int32),
            np.asarray(d["left"], dtype=np.int32),
            np.asarray(d["right"], dtype=np.int32),
            value,
            np.asarray(d["gain"], dtype=np.float64),
            int(d["depth"]),
        )


@njit(cache=True)
def _grad_histogram(Xs, rows, grad, hess, n_bins):
    out = np.zeros((n_bins, 3))
    F = Xs.shape[1]
    for i in range(rows.shape[0]):
        r = rows[i]
        g = grad[r]
        h = hess[r]
        for f in range(F):
            b = Xs[r, f]
            out[b, 0] += g
            out[b, 1] += h
            out[b, 2] += 1.0
    return out


@njit(cache=True)
def _class_histogram(Xs, rows, y, n_classes, n_bins):
    out = np.zeros((n_bins, n_classes))
    F = Xs.shape[1]
    for i in range(rows.shape[0]):
        r = rows[i]
        c = y[r]
        for f in range(F):
            out[Xs[r, f], c] += 1.0
    return out


@njit(cache=True)
def _scan_gradient(hist, offsets, sizes, allowed, total, reg_lambda, min_child_weight):
    """Best (bin, gain) over all features; bins scanned in order, first maximum wins."""
    G, H = total[0], total[1]
    den = H + reg_lambda
    parent = G * G / den if den > 0 else 0.0
    best_bin, best_gain = -1, -np.inf
    for f in range(offsets.shape[0]):
        if not allowed[f]:
            continue
        gl = 0.0
        hl = 0.0
        nl = 0.0
        start = offsets[f]
        for b in range(start, start + sizes[f] - 1):
            gl += hist[b, 0]
            hl += hist[b, 1]
            nl += hist[b, 2]
            gr = G - gl
            hr = H - hl
            nr = total[2] - nl
            if nl <= 0 or nr <= 0 or hl < min_child_weight or hr < min_child_weight:
                continue
            dl = hl + reg_lambda
            dr = hr + reg_lambda
            if dl <= 0 or dr <= 0:
                continue
            gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent)
            if gain > best_gain:
                best_bin, best_gain = b, gain
    return best_bin, best_gain


@njit(cache=True)
def _gini_score(s):
    n = 0.0
    sq = 0.0
    for v in s:
        n += v
        sq += v * v
    return sq / n if n > 0 else 0.0


@njit(cache=True)
def _scan_gini(hist, offsets, sizes, allowed, total, min_child_weight):
    C = total.shape[0]
    n = total.sum()
    parent = _gini_score(total)
    left = np.empty(C)
    right = np.empty(C)
    best_bin, best_gain = -1, -np.inf
    for f in range(offsets.shape[0]):
        if not allowed[f]:
            continue
        left[:] = 0.0
        nl = 0.0
        start = offsets[f]
        for b in range(start, start + sizes[f] - 1):
            for c in range(C):
                left[c] += hist[b, c]
                nl += hist[b, c]
            nr = n - nl
            if nl <= 0 or nr <= 0 or nl < min_child_weight or nr < min_child_weight:
                continue
            for c in range(C):
                right[c] = total[c] - left[c]
            gain = _gini_score(left) + _gini_score(right) - parent
            if gain > best_gain:
                best_bin, best_gain = b, gain
    return best_bin, best_gain


class BinLayout:
    """Bin offsets for a discrete feature matrix."""

    def __init__(self, cardinalities) -> None:
        sizes = np.asarray(cardinalities, dtype=np.int64) + 1
        self.sizes = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.n_bins = int(sizes.sum())
        self.n_features = sizes.size
        # feature of each bin and threshold it represents
        self.bin_feature = np.repeat(np.arange(self.n_features), sizes)
        self.bin_threshold = np.arange(self.n_bins) - self.offsets[self.bin_feature]

    def shift(self, X: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(X.astype(np.int64) + self.offsets)


class Criterion:
    """Per-row statistics, split scoring and leaf values for one tree type."""

    n_stats: int
    min_gain: float = _MIN_GAIN

    def histogram(self, Xs: np.ndarray, rows: np.ndarray, n_bins: int) -> np.ndarray:
        raise NotImplementedError

    def count(self, stats: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gain(self, left: np.ndarray, right: np.ndarray, parent: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def valid(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def leaf(self, stats: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scan(self, layout: "BinLayout", hist: np.ndarray, total: np.ndarray,
             allowed: np.ndarray) -> tuple[int, float]:
        raise NotImplementedError

    def is_pure(self, stats: np.ndarray) -> bool:
        return False


class GiniCriterion(Criterion):
    """Class-count statistics; gain is the count-weighted Gini impurity decrease.

    As in classic CART, an impure node takes its best valid split even when
    the decrease is zero (balanced XOR cells are only separable that way).
    """

    min_gain = -1e-9

    def __init__(self, y: np.ndarray, n_classes: int, min_child_weight: float) -> None:
        self.y = y.astype(np.int64)
        self.n_stats = n_classes
        self.min_child_weight = min_child_weight

    def histogram(self, Xs, rows, n_bins):
        return _class_histogram(Xs, rows, self.y, self.n_stats, n_bins)

    def count(self, stats):
        return stats.sum(axis=-1)

    @staticmethod
    def _score(s):
        n = s.sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, (s * s).sum(axis=-1) / np.where(n > 0, n, 1), 0.0)

    def gain(self, left, right, parent):
        return self._score(left) + self._score(right) - self._score(parent)

    def valid(self, left, right):
        nl, nr = left.sum(axis=-1), right.sum(axis=-1)
        return (nl > 0) & (nr > 0) & (nl >= self.min_child_weight) & (nr >= self.min_child_weight)

    def leaf(self, stats):
        return stats / stats.sum()

    def scan(self, layout, hist, total, allowed):
        return _scan_gini(hist, layout.offsets, layout.sizes, allowed, total,
                          float(self.min_child_weight))

    def is_pure(self, stats):
        return np.count_nonzero(stats) <= 1


class GradientCriterion(Criterion):
    """(gradient, hessian, count) statistics for second-order boosting trees."""

    n_stats = 3

    def __init__(self, grad: np.ndarray, hess: np.ndarray, reg_lambda: float,
                 min_child_weight: float, eta: float) -> None:
        self.grad = np.ascontiguousarray(grad, dtype=np.float64)
        self.hess = np.ascontiguousarray(hess, dtype=np.float64)
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight
        self.eta = eta

    def histogram(self, Xs, rows, n_bins):
        return _grad_histogram(Xs, rows, self.grad, self.hess, n_bins)

    def count(self, stats):
        return stats[..., 2]

    def _score(self, s):
        den = s[..., 1] + self.reg_lambda
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, s[..., 0] ** 2 / np.where(den > 0, den, 1.0), 0.0)

    def gain(self, left, right, parent):
        return 0.5 * (self._score(left) + self._score(right) - self._score(parent))

    def valid(self, left, right):
        return ((left[:, 2] > 0) & (right[:, 2] > 0)
                & (left[:, 1] >= self.min_child_weight) & (right[:, 1] >= self.min_child_weight)
                & (left[:, 1] + self.reg_lambda > 0) & (right[:, 1] + self.reg_lambda > 0))

    def leaf(self, stats):
        den = stats[1] + self.reg_lambda
        w = -stats[0] / den if den > 0 else 0.0
        return np.array([w * self.eta])

    def scan(self, layout, hist, total, allowed):
        return _scan_gradient(hist, layout.offsets, layout.sizes, allowed, total,
                              float(self.reg_lambda), float(self.min_child_weight))


def _best_split(layout: BinLayout, hist: np.ndarray, total: np.ndarray, crit: Criterion,
                allowed: np.ndarray | None):
    """(feature, threshold, gain) of the best valid split, or None below the gain tolerance."""
    if allowed is None:
        allowed = np.ones(layout.n_features, dtype=np.bool_)
    b, gain = crit.scan(layout, hist, np.ascontiguousarray(total, dtype=np.float64), allowed)
    if b < 0 or not gain > crit.min_gain:
        return None
    return int(layout.bin_feature[b]), int(layout.bin_threshold[b]), max(float(gain), 0.0)


def grow(X: np.ndarray, layout: BinLayout, crit: Criterion, rows: np.ndarray, max_depth: int,
         feature_sampler: Callable[[], np.ndarray] | None = None,
         Xs: np.ndarray | None = None, leaves: list | None = None) -> Tree:
    """Grow one tree depth-first (left child first) on ``rows`` of ``X``.

    ``Xs`` is ``layout.shift(X)``; pass it when growing many trees on one matrix.
    When ``leaves`` is a list, ``(leaf_node, rows)`` pairs are appended to it,
    which saves re-routing the training rows through the finished tree.
    """
    if Xs is None:
        Xs = layout.shift(X)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    feature, threshold, left, right, values, gains = [], [], [], [], [], []

    def new_node() -> int:
        for lst in (feature, threshold, left, right):
            lst.append(-1)
        values.append(None)
        gains.append(0.0)
        return len(feature) - 1

    root = new_node()
    hist0 = crit.histogram(Xs, rows, layout.n_bins)
    stack = [(root, rows, hist0, 0)]
    max_seen = 0
    while stack:
        node, node_rows, hist, depth = stack.pop()
        total = hist[layout.offsets[0]:layout.offsets[0] + layout.sizes[0]].sum(axis=0)
        values[node] = crit.leaf(total)
        max_seen = max(max_seen, depth)
        if depth >= max_depth or node_rows.size < 2 or crit.is_pure(total):
            split = None
        else:
            allowed = feature_sampler() if feature_sampler is not None else None
            split = _best_split(layout, hist, total, crit, allowed)
        if split is None:
            if leaves is not None:
                leaves.append((node, node_rows))
            continue
        f, t, g = split
        go_left = X[node_rows, f] <= t
        l_rows, r_rows = node_rows[go_left], node_rows[~go_left]
        if l_rows.size <= r_rows.size:
            l_hist = crit.histogram(Xs, l_rows, layout.n_bins)
            r_hist = hist - l_hist
        else:
            r_hist = crit.histogram(Xs, r_rows, layout.n_bins)
            l_hist = hist - r_hist
        li, ri = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node], gains[node] = f, t, li, ri, g
        stack.append((ri, r_rows, r_hist, depth + 1))
        stack.append((li, l_rows, l_hist, depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.int32),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.vstack(values).astype(np.float64),
        np.asarray(gains, dtype=np.float64),
        max_seen,
    )
