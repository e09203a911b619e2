"""From-scratch multiclass classifiers over discrete feature codes."""
from __future__ import annotations

import numpy as np

from ..scoring import FeatureScoreTable
from .models import (
    ForestModel,
    GbtModel,
    LearnerModel,
    NBayesModel,
    TreeModel,
    log_loss,
    softmax,
    softmax_grad_hess,
    train,
    train_forest,
    train_gbt,
    train_nbayes,
    train_tree,
)
from .params import DEFAULT_GRID, LEARNERS, LearnerParams
from .persist import dumps_model, load_model, loads_model, save_model


def predict(model: LearnerModel, rows) -> np.ndarray:
    return model.predict(rows)


def predict_proba(model: LearnerModel, rows) -> np.ndarray:
    return model.predict_proba(rows)


def feature_importance(model: LearnerModel) -> FeatureScoreTable:
    """Split gain (gbt) or impurity decrease (tree, forest) per feature, normalized to sum 1."""
    return FeatureScoreTable.from_scores(model.feature_names, model.importances())


__all__ = [
    "DEFAULT_GRID", "LEARNERS", "ForestModel", "GbtModel", "LearnerModel", "LearnerParams",
    "NBayesModel", "TreeModel", "dumps_model", "feature_importance", "load_model", "loads_model",
    "log_loss", "predict", "predict_proba", "save_model", "softmax", "softmax_grad_hess", "train",
    "train_forest", "train_gbt", "train_nbayes", "train_tree",
]
