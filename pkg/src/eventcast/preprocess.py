"""Fit-once, replay-anywhere preprocessing and on-disk dataset artifacts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .discretize import DiscretizerState, expand_log_sig, ordinalize_passthrough, variance_filter
from .errors import DataError
from .ingest import (
    CATEGORICAL, PASSTHROUGH, DatasetSchema, EncodedDataset, FeatureMeta, RawFlowTable, encode_with,
    ordinal_encode,
)

PROCESSED = "processed"
UNPROCESSED = "unprocessed"


@dataclass
class Preprocessor:
    """Encoding state fitted on a training table.

    ``processed`` expands continuous columns into log/sig codes and drops
    zero-variance features; ``unprocessed`` codes every raw numeric value
    as its own category.
    """

    variant: str
    schema: DatasetSchema
    class_names: tuple[str, ...]
    categorical: dict[str, FeatureMeta]
    feature_names: list[str]
    discretizer: DiscretizerState = field(default_factory=DiscretizerState)
    raw_numeric: dict[str, FeatureMeta] = field(default_factory=dict)

    @classmethod
    def fit(cls, table: RawFlowTable, variant: str = PROCESSED,
            variance_threshold: float = 0.0) -> tuple["Preprocessor", EncodedDataset]:
        if variant not in (PROCESSED, UNPROCESSED):
            raise ValueError(f"unknown variant {variant!r}")
        base = ordinal_encode(table)
        categorical = {m.name: m for m in base.feature_meta if m.kind == CATEGORICAL}
        state = DiscretizerState()
        raw_numeric: dict[str, FeatureMeta] = {}
        has_numeric = any(m.kind == PASSTHROUGH for m in base.feature_meta)
        if variant == PROCESSED:
            ds = expand_log_sig(base, state) if has_numeric else base
            ds = variance_filter(ds, variance_threshold, state)
        else:
            ds = ordinalize_passthrough(base)
            raw_numeric = {m.name: m for m in ds.feature_meta if m.name not in categorical}
        pre = cls(variant, table.schema, base.class_names, categorical, ds.feature_names, state,
                  raw_numeric)
        return pre, ds

    def transform(self, table: RawFlowTable) -> EncodedDataset:
        base = encode_with(table, list(self.categorical.values()), self.class_names)
        has_numeric = any(m.kind == PASSTHROUGH for m in base.feature_meta)
        if self.variant == PROCESSED:
            ds = expand_log_sig(base, self.discretizer) if has_numeric else base
        else:
            ds = ordinalize_passthrough(base, self.raw_numeric)
        ds = ds.select_named(self.feature_names)
        ds.validate(allow_reserved=True)
        return ds

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "schema": self.schema.to_dict(),
            "class_names": list(self.class_names),
            "categorical": {k: m.to_dict() for k, m in self.categorical.items()},
            "feature_names": list(self.feature_names),
            "discretizer": self.discretizer.to_dict(),
            "raw_numeric": {k: m.to_dict() for k, m in self.raw_numeric.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Preprocessor":
        return cls(
            variant=d["variant"],
            schema=DatasetSchema.from_dict(d["schema"]),
            class_names=tuple(d["class_names"]),
            categorical={k: FeatureMeta.from_dict(m) for k, m in d["categorical"].items()},
            feature_names=list(d["feature_names"]),
            discretizer=DiscretizerState.from_dict(d["discretizer"]),
            raw_numeric={k: FeatureMeta.from_dict(m) for k, m in d["raw_numeric"].items()},
        )


def take_rows(table: RawFlowTable, rows: np.ndarray) -> RawFlowTable:
    rows = np.asarray(rows, dtype=np.int64)
    return RawFlowTable(table.schema, {k: v[rows] for k, v in table.columns.items()},
                        int(rows.size), 0, [], table.source)


def save_dataset(ds: EncodedDataset, stem: str | Path, extra: Mapping | None = None) -> None:
    """Write ``<stem>.features.npy`` (column-major), ``<stem>.labels.npy`` and a ``<stem>.json`` sidecar."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    np.save(f"{stem}.features.npy", np.asfortranarray(ds.features), allow_pickle=False)
    np.save(f"{stem}.labels.npy", ds.labels, allow_pickle=False)
    sidecar = {
        "n_rows": ds.n_rows,
        "n_features": ds.n_features,
        "class_names": list(ds.class_names),
        "class_counts": ds.class_counts().tolist(),
        "feature_meta": [m.to_dict() for m in ds.feature_meta],
        "digest": ds.digest(),
    }
    if extra:
        sidecar.update(extra)
    Path(f"{stem}.json").write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n",
                                    encoding="utf-8")


def load_dataset(stem: str | Path) -> EncodedDataset:
    stem = Path(stem)
    try:
        side = json.loads(Path(f"{stem}.json").read_text(encoding="utf-8"))
        features = np.ascontiguousarray(np.load(f"{stem}.features.npy", allow_pickle=False))
        labels = np.load(f"{stem}.labels.npy", allow_pickle=False)
    except FileNotFoundError as exc:
        raise DataError(f"missing dataset artifact: {exc.filename} (run `preprocess` first)") from None
    ds = EncodedDataset(features, labels, tuple(FeatureMeta.from_dict(m) for m in side["feature_meta"]),
                        tuple(side["class_names"]))
    if ds.digest() != side["digest"]:
        raise DataError(f"{stem}: dataset artifact does not match its sidecar digest")
    return ds
