"""Trained classifier types and their training routines."""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..ingest import EncodedDataset, FeatureMeta
from ..rng import substream
from ._grow import BinLayout, GiniCriterion, GradientCriterion, Tree, grow
from .params import LearnerParams

LOG_FLOOR = math.log(1e-12)


def fingerprint(feature_meta) -> str:
    h = hashlib.sha256()
    for m in feature_meta:
        h.update(f"{m.name}\x1f{m.kind}\x1f{m.cardinality}\x1e".encode())
    return h.hexdigest()[:16]


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_grad_hess(scores: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and diagonal hessian of the multiclass log-loss w.r.t. the raw scores."""
    p = softmax(scores)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(y)), y] = 1.0
    return p - onehot, p * (1.0 - p)


def log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    z = scores - scores.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(y)), y]))


@dataclass
class LearnerModel:
    """Base for trained classifiers. ``bundle`` carries preprocessing state for persistence."""

    kind = "base"

    class_names: tuple[str, ...]
    feature_meta: tuple[FeatureMeta, ...]
    params: LearnerParams
    bundle: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_features(self) -> int:
        return len(self.feature_meta)

    @property
    def feature_names(self) -> list[str]:
        return [m.name for m in self.feature_meta]

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.feature_meta)

    def _check_rows(self, rows) -> np.ndarray:
        if isinstance(rows, EncodedDataset):
            if fingerprint(rows.feature_meta) != self.fingerprint:
                raise DataError("dataset features do not match the model's training features")
            rows = rows.features
        X = np.asarray(rows)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        if X.size:
            limits = np.array([m.cardinality for m in self.feature_meta])
            if X.min() < 0 or np.any(X > limits):
                raise DataError("feature code beyond the reserved unseen-value bucket")
        return X.astype(np.int32, copy=False)

    def predict_proba(self, rows) -> np.ndarray:
        return self._proba(self._check_rows(rows))

    def predict(self, rows) -> np.ndarray:
        # np.argmax picks the first maximum: ties go to the lowest class code
        return np.argmax(self.predict_proba(rows), axis=1).astype(np.int32)

    def _proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def importances(self) -> np.ndarray:
        raise TypeError(f"{self.kind} models do not expose feature importances")


@dataclass
class TreeModel(LearnerModel):
    kind = "tree"
    tree: Tree | None = None

    def _proba(self, X):
        return self.tree.predict(X)

    def importances(self):
        return _tree_importance([self.tree], self.n_features)


@dataclass
class ForestModel(LearnerModel):
    kind = "forest"
    trees: list[Tree] = field(default_factory=list)

    def _proba(self, X):
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for t in self.trees:
            votes[rows, np.argmax(t.predict(X), axis=1)] += 1.0
        return votes / len(self.trees)

    def importances(self):
        return _tree_importance(self.trees, self.n_features)


@dataclass
class GbtModel(LearnerModel):
    kind = "gbt"
    base_score: np.ndarray | None = None
    rounds: list[list[Tree]] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.tile(self.base_score, (X.shape[0], 1))
        for trees in self.rounds:
            for k, t in enumerate(trees):
                scores[:, k] += t.predict(X)[:, 0]
        return scores

    def _proba(self, X):
        return softmax(self.raw_scores(X))

    def importances(self):
        return _tree_importance([t for r in self.rounds for t in r], self.n_features)


@dataclass
class NBayesModel(LearnerModel):
    kind = "nbayes"
    log_prior: np.ndarray | None = None
    log_lik: list[np.ndarray] = field(default_factory=list)  # per feature: (C, cardinality + 1)

    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        jll = np.tile(self.log_prior, (X.shape[0], 1))
        for j, table in enumerate(self.log_lik):
            jll += table[:, X[:, j]].T
        return jll

    def _proba(self, X):
        return softmax(self.joint_log_likelihood(X))


def _tree_importance(trees, n_features: int) -> np.ndarray:
    imp = np.zeros(n_features)
    for t in trees:
        split = t.feature >= 0
        np.add.at(imp, t.feature[split], t.gain[split])
    s = imp.sum()
    return imp / s if s > 0 else imp


def _check_trainable(ds: EncodedDataset) -> None:
    if ds.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    if ds.n_features == 0:
        raise DataError("cannot train without features")
    if ds.n_classes < 2:
        raise DataError("need at least two classes")
    if not ds.is_discrete:
        raise DataError("learners need a fully discretized dataset")


def _meta_common(ds: EncodedDataset, params: LearnerParams) -> dict:
    return dict(class_names=tuple(ds.class_names), feature_meta=tuple(ds.feature_meta), params=params)


def _layout(ds: EncodedDataset) -> BinLayout:
    return BinLayout([m.cardinality for m in ds.feature_meta])


def train_tree(ds: EncodedDataset, params: LearnerParams) -> TreeModel:
    """Greedy CART with Gini impurity and exhaustive threshold search."""
    _check_trainable(ds)
    crit = GiniCriterion(ds.labels, ds.n_classes, params.min_child_weight)
    tree = grow(ds.features, _layout(ds), crit, np.arange(ds.n_rows), params.max_depth)
    return TreeModel(**_meta_common(ds, params), tree=tree)


def _forest_member(ds: EncodedDataset, params: LearnerParams, layout: BinLayout, Xs: np.ndarray,
                   i: int) -> Tree:
    rng = substream(params.seed, "forest", i)
    if params.bootstrap:
        rows = np.sort(rng.integers(0, ds.n_rows, size=ds.n_rows))
    else:
        rows = np.arange(ds.n_rows)
    F = ds.n_features
    m = params.feature_subsample or math.ceil(math.sqrt(F))
    m = min(m, F)

    def sampler() -> np.ndarray:
        mask = np.zeros(F, dtype=bool)
        mask[rng.choice(F, size=m, replace=False)] = True
        return mask

    crit = GiniCriterion(ds.labels, ds.n_classes, params.min_child_weight)
    return grow(ds.features, layout, crit, rows, params.max_depth,
                feature_sampler=sampler if m < F else None, Xs=Xs)


def train_forest(ds: EncodedDataset, params: LearnerParams, workers: int = 1) -> ForestModel:
    """Bagged CART trees with per-split feature subsampling.

    Tree ``i`` draws from its own seeded substream, so the model does not
    depend on ``workers``.
    """
    _check_trainable(ds)
    layout = _layout(ds)
    Xs = layout.shift(ds.features)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(lambda i: _forest_member(ds, params, layout, Xs, i),
                                  range(params.n_trees)))
    else:
        trees = [_forest_member(ds, params, layout, Xs, i) for i in range(params.n_trees)]
    return ForestModel(**_meta_common(ds, params), trees=trees)


def class_log_prior(labels: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    return np.maximum(np.log(np.maximum(counts / counts.sum(), 1e-300)), LOG_FLOOR)


def train_gbt(ds: EncodedDataset, params: LearnerParams) -> GbtModel:
    """Multiclass softmax boosting: one second-order regression tree per class per round."""
    _check_trainable(ds)
    layout = _layout(ds)
    X, y = ds.features, ds.labels
    Xs = layout.shift(X)
    rows = np.arange(ds.n_rows)
    base = class_log_prior(y, ds.n_classes)
    scores = np.tile(base, (ds.n_rows, 1))
    rounds, losses = [], [log_loss(scores, y)]
    for _ in range(params.n_rounds):
        grad, hess = softmax_grad_hess(scores, y)
        trees = []
        for k in range(ds.n_classes):
            crit = GradientCriterion(grad[:, k], hess[:, k], params.reg_lambda,
                                     params.min_child_weight, params.eta)
            leaves: list = []
            t = grow(X, layout, crit, rows, params.max_depth, Xs=Xs, leaves=leaves)
            trees.append(t)
            for node, leaf_rows in leaves:
                scores[leaf_rows, k] += t.value[node, 0]
        rounds.append(trees)
        losses.append(log_loss(scores, y))
    return GbtModel(**_meta_common(ds, params), base_score=base, rounds=rounds, train_loss=losses)


def train_nbayes(ds: EncodedDataset, params: LearnerParams) -> NBayesModel:
    """Categorical naive Bayes with Laplace smoothing ``alpha``.

    P(code | class) = (n_class,code + alpha) / (n_class + alpha * cardinality);
    the reserved unseen code is smoothed like any zero-count code.
    """
    _check_trainable(ds)
    C = ds.n_classes
    counts = np.bincount(ds.labels, minlength=C).astype(np.float64)
    log_lik = []
    for j, m in enumerate(ds.feature_meta):
        table = np.zeros((C, m.cardinality + 1))
        np.add.at(table, (ds.labels, ds.features[:, j]), 1.0)
        den = counts[:, None] + params.alpha * m.cardinality
        with np.errstate(divide="ignore", invalid="ignore"):
            p = np.where(den > 0, (table + params.alpha) / np.where(den > 0, den, 1.0), 0.0)
            log_lik.append(np.maximum(np.log(np.maximum(p, 1e-300)), LOG_FLOOR))
    return NBayesModel(**_meta_common(ds, params), log_prior=class_log_prior(ds.labels, C),
                       log_lik=log_lik)


TRAINERS = {"tree": train_tree, "forest": train_forest, "gbt": train_gbt, "nbayes": train_nbayes}


def train(ds: EncodedDataset, params: LearnerParams, workers: int = 1) -> LearnerModel:
    if params.learner == "forest":
        return train_forest(ds, params, workers=workers)
    return TRAINERS[params.learner](ds, params)
