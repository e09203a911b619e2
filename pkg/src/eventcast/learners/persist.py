"""JSON model bundles: versioned, checksummed, trees stored as flat node arrays."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from ..ingest import FeatureMeta
from ._grow import Tree
from .models import ForestModel, GbtModel, LearnerModel, NBayesModel, TreeModel
from .params import LearnerParams

FORMAT_VERSION = 1
_KINDS = {cls.kind: cls for cls in (TreeModel, ForestModel, GbtModel, NBayesModel)}


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def model_to_dict(model: LearnerModel) -> dict:
    body: dict = {
        "class_names": list(model.class_names),
        "feature_meta": [m.to_dict() for m in model.feature_meta],
        "params": model.params.to_dict(),
        "fingerprint": model.fingerprint,
    }
    if isinstance(model, TreeModel):
        body["tree"] = model.tree.to_dict()
    elif isinstance(model, ForestModel):
        body["trees"] = [t.to_dict() for t in model.trees]
    elif isinstance(model, GbtModel):
        body["base_score"] = model.base_score.tolist()
        body["rounds"] = [[t.to_dict() for t in r] for r in model.rounds]
        body["train_loss"] = list(model.train_loss)
    elif isinstance(model, NBayesModel):
        body["log_prior"] = model.log_prior.tolist()
        body["log_lik"] = [t.tolist() for t in model.log_lik]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return body


def model_from_dict(kind: str, body: dict, bundle: dict) -> LearnerModel:
    if kind not in _KINDS:
        raise ModelFormatError(f"unknown learner kind {kind!r}")
    common = dict(
        class_names=tuple(body["class_names"]),
        feature_meta=tuple(FeatureMeta.from_dict(m) for m in body["feature_meta"]),
        params=LearnerParams.from_dict(body["params"]),
        bundle=bundle,
    )
    if kind == "tree":
        model = TreeModel(**common, tree=Tree.from_dict(body["tree"]))
    elif kind == "forest":
        model = ForestModel(**common, trees=[Tree.from_dict(t) for t in body["trees"]])
    elif kind == "gbt":
        model = GbtModel(**common, base_score=np.asarray(body["base_score"], dtype=np.float64),
                         rounds=[[Tree.from_dict(t) for t in r] for r in body["rounds"]],
                         train_loss=[float(v) for v in body["train_loss"]])
    else:
        model = NBayesModel(**common, log_prior=np.asarray(body["log_prior"], dtype=np.float64),
                            log_lik=[np.asarray(t, dtype=np.float64) for t in body["log_lik"]])
    if model.fingerprint != body["fingerprint"]:
        raise ModelFormatError("feature fingerprint does not match stored feature metadata")
    return model


def dumps_model(model: LearnerModel) -> str:
    payload = {"model": model_to_dict(model), "bundle": model.bundle}
    doc = {
        "format_version": FORMAT_VERSION,
        "metadata": {
            "learner": model.kind,
            "n_features": model.n_features,
            "n_classes": model.n_classes,
            "class_names": list(model.class_names),
        },
        "checksum": hashlib.sha256(_canonical(payload).encode()).hexdigest(),
        **payload,
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads_model(text: str) -> LearnerModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model bundle is corrupted or truncated ({exc.msg})") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError("not a model bundle")
    if doc["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported bundle format_version {doc['format_version']!r}")
    try:
        payload = {"model": doc["model"], "bundle": doc["bundle"]}
        if hashlib.sha256(_canonical(payload).encode()).hexdigest() != doc["checksum"]:
            raise ModelFormatError("model bundle checksum mismatch (file corrupted)")
        return model_from_dict(doc["metadata"]["learner"], doc["model"], doc["bundle"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model bundle is malformed ({exc})") from None


def save_model(model: LearnerModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path) -> LearnerModel:
    p = Path(path)
    if not p.exists():
        raise ModelFormatError(f"{p}: no such model bundle")
    return loads_model(p.read_text(encoding="utf-8"))
