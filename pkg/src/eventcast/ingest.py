"""CSV ingestion and ordinal encoding of flow records."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from . import schemas
from .errors import DataError, SchemaError

log = logging.getLogger(__name__)

CATEGORICAL = "categorical"
NUMERIC = "numeric"
LABEL = "label"
DROP = "drop"
COLUMN_KINDS = (CATEGORICAL, NUMERIC, LABEL, DROP)

# feature kinds inside an EncodedDataset
MAG = "mag"
SIG = "sig"
PASSTHROUGH = "passthrough"
FEATURE_KINDS = (CATEGORICAL, MAG, SIG, PASSTHROUGH)

MAX_DROP_FRACTION = 0.5


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple[ColumnSpec, ...]
    label_classes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"schema {self.name!r}: duplicate column names")
        bad = [c.kind for c in self.columns if c.kind not in COLUMN_KINDS]
        if bad:
            raise SchemaError(f"schema {self.name!r}: unknown column kinds {bad}")
        n_label = sum(c.kind == LABEL for c in self.columns)
        if n_label != 1:
            raise SchemaError(f"schema {self.name!r}: expected exactly one label column, found {n_label}")

    @property
    def label_column(self) -> str:
        return next(c.name for c in self.columns if c.kind == LABEL)

    @property
    def feature_columns(self) -> list[ColumnSpec]:
        return [c for c in self.columns if c.kind in (CATEGORICAL, NUMERIC)]

    def kind_of(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "columns": [[c.name, c.kind] for c in self.columns],
            "label_classes": list(self.label_classes) if self.label_classes else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetSchema":
        classes = d.get("label_classes")
        return cls(
            name=d["name"],
            columns=tuple(ColumnSpec(n, k) for n, k in d["columns"]),
            label_classes=tuple(classes) if classes else None,
        )


@dataclass
class RawFlowTable:
    schema: DatasetSchema
    columns: dict[str, np.ndarray]
    row_count: int
    dropped: int = 0
    dropped_lines: list[int] = field(default_factory=list)
    source: str = ""

    def __post_init__(self) -> None:
        for name, col in self.columns.items():
            if len(col) != self.row_count:
                raise DataError(f"column {name!r} has {len(col)} values, expected {self.row_count}")


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str
    cardinality: int
    code_map: dict[str, int] = field(default_factory=dict)
    source: str | None = None

    def decode(self, code: int) -> str:
        for value, c in self.code_map.items():
            if c == code:
                return value
        raise KeyError(f"{self.name}: no value for code {code}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "cardinality": self.cardinality,
            "code_map": dict(self.code_map),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureMeta":
        return cls(d["name"], d["kind"], int(d["cardinality"]),
                   {str(k): int(v) for k, v in d["code_map"].items()}, d.get("source"))


@dataclass(frozen=True)
class EncodedDataset:
    """Row-major feature matrix plus class labels.

    ``features`` is int32 once every column is discrete; it is float64 while
    passthrough (not yet discretized) numeric columns remain. A dataset
    produced by transforming new data with fitted maps may contain the
    reserved unseen-value code, equal to the feature's cardinality.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_meta: tuple[FeatureMeta, ...]
    class_names: tuple[str, ...]

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> list[str]:
        return [m.name for m in self.feature_meta]

    @property
    def is_discrete(self) -> bool:
        return all(m.kind != PASSTHROUGH for m in self.feature_meta)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.feature_names.index(name)]

    def select_features(self, indices: Sequence[int]) -> "EncodedDataset":
        idx = list(indices)
        return replace(self, features=np.ascontiguousarray(self.features[:, idx]),
                       feature_meta=tuple(self.feature_meta[i] for i in idx))

    def select_named(self, names: Sequence[str]) -> "EncodedDataset":
        pos = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise DataError(f"unknown features: {missing}")
        return self.select_features([pos[n] for n in names])

    def take(self, rows: np.ndarray) -> "EncodedDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, features=self.features[rows], labels=self.labels[rows])

    def validate(self, allow_reserved: bool = False) -> None:
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_meta):
            raise DataError("feature matrix shape does not match feature metadata")
        if len(self.labels) != self.n_rows:
            raise DataError("label vector length does not match row count")
        if self.n_rows and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataError("label code out of range")
        for j, m in enumerate(self.feature_meta):
            if m.kind == PASSTHROUGH:
                continue
            col = self.features[:, j]
            limit = m.cardinality + (1 if allow_reserved else 0)
            if self.n_rows and (col.min() < 0 or col.max() >= limit):
                raise DataError(f"feature {m.name!r} has codes outside 0..{limit - 1}")

    def digest(self) -> str:
        """Content hash covering values, dtypes, metadata and class names."""
        h = hashlib.sha256()
        h.update(str(self.features.dtype).encode())
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        for m in self.feature_meta:
            h.update(json.dumps(m.to_dict(), sort_keys=True).encode())
        h.update(repr(self.class_names).encode())
        return h.hexdigest()


def _normalize(name: str) -> str:
    return name.strip()


def _parse_numeric(values: np.ndarray) -> np.ndarray:
    """Float parse; NaN marks a corrupt cell (unparseable, non-finite or negative)."""
    parsed = pd.to_numeric(pd.Series(values, dtype=object).str.strip(), errors="coerce")
    out = parsed.to_numpy(dtype=np.float64, na_value=np.nan)
    out[~np.isfinite(out) | (out < 0)] = np.nan
    return out


def _read_text_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DataError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                            encoding="utf-8", skipinitialspace=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file, no header row") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from None
    frame.columns = [_normalize(c) for c in frame.columns]
    return frame


def _infer_schema(path: Path, label_column: str | None, drop: Iterable[str] = ()) -> DatasetSchema:
    if not label_column:
        raise SchemaError("schema 'infer' needs a label column name")
    frame = _read_text_frame(path)
    if label_column not in frame.columns:
        raise SchemaError(f"{path}: label column {label_column!r} not in header")
    drop = {_normalize(d) for d in drop}
    cols = []
    for name in frame.columns:
        if name == label_column:
            kind = LABEL
        elif name in drop or name.lower() in schemas.ADDRESS_COLUMNS:
            kind = DROP
        else:
            values = frame[name].to_numpy(dtype=object)
            as_num = pd.to_numeric(pd.Series(values).str.strip(), errors="coerce")
            kind = NUMERIC if len(values) and as_num.notna().all() else CATEGORICAL
        cols.append(ColumnSpec(name, kind))
    return DatasetSchema("infer", tuple(cols))


def resolve_schema(name: str, path: str | Path | None = None, label_column: str | None = None,
                   drop: Iterable[str] = ()) -> DatasetSchema:
    """Look up a built-in schema, or deduce one from ``path`` when ``name == "infer"``."""
    key = name.strip().lower()
    if key in ("unsw-nb15", "unsw_nb15", "unsw"):
        kinds = {n: NUMERIC for n in schemas.UNSW_NUMERIC}
        kinds.update({n: CATEGORICAL for n in schemas.UNSW_CATEGORICAL})
        kinds[schemas.UNSW_LABEL] = LABEL
        kinds.update({n: DROP for n in schemas.UNSW_DROP})
        return DatasetSchema("unsw-nb15",
                             tuple(ColumnSpec(n, kinds[n]) for n in schemas.UNSW_ORDER),
                             schemas.UNSW_CLASSES)
    if key in ("cicids-17", "cicids17", "cicids-2017"):
        cols = [ColumnSpec(n, NUMERIC) for n in schemas.CICIDS_NUMERIC]
        cols.append(ColumnSpec(schemas.CICIDS_LABEL, LABEL))
        return DatasetSchema("cicids-17", tuple(cols))
    if key == "infer":
        if path is None:
            raise SchemaError("schema 'infer' needs a CSV path")
        return _infer_schema(Path(path), label_column, drop)
    raise SchemaError(f"unknown schema {name!r} (known: unsw-nb15, cicids-17, infer)")


def load_csv(path: str | Path, schema: DatasetSchema) -> RawFlowTable:
    """Parse ``path`` against ``schema``; rows with corrupt numeric cells are dropped and counted."""
    path = Path(path)
    frame = _read_text_frame(path)
    header = list(frame.columns)
    expected = [c.name for c in schema.columns]
    unknown = [h for h in header if h not in expected]
    missing = [e for e in expected if e not in header]
    if unknown or missing or len(set(header)) != len(header):
        raise SchemaError(f"{path}: header does not match schema {schema.name!r} "
                          f"(unmapped: {unknown[:5]}, missing: {missing[:5]})")
    n = len(frame)
    if n == 0:
        raise DataError(f"{path}: no data rows")

    columns: dict[str, np.ndarray] = {}
    bad = np.zeros(n, dtype=bool)
    for spec in schema.columns:
        raw = frame[spec.name].to_numpy(dtype=object)
        if spec.kind == NUMERIC:
            parsed = _parse_numeric(raw)
            bad |= np.isnan(parsed)
            columns[spec.name] = parsed
        else:
            columns[spec.name] = np.array([s.strip() for s in raw], dtype=object)

    dropped = int(bad.sum())
    if dropped > MAX_DROP_FRACTION * n:
        raise SchemaError(f"{path}: {dropped} of {n} rows have corrupt numeric cells; "
                          f"schema {schema.name!r} probably does not fit this file")
    # data rows start on line 2 (line 1 is the header)
    dropped_lines = (np.flatnonzero(bad) + 2).tolist()
    if dropped:
        log.info("%s: dropped %d corrupt rows (first at line %d)", path, dropped, dropped_lines[0])
        keep = ~bad
        columns = {k: v[keep] for k, v in columns.items()}
    return RawFlowTable(schema, columns, n - dropped, dropped, dropped_lines, str(path))


def category_order(values: Iterable[str]) -> list[str]:
    """Ascending order for category strings.

    Lexicographic, except that a column whose every distinct value is a
    finite number is ordered numerically so threshold splits on codes stay
    meaningful for integer-valued counters.
    """
    distinct = sorted(set(values))
    try:
        nums = [float(v) for v in distinct]
    except ValueError:
        return distinct
    if not all(math.isfinite(x) for x in nums):
        return distinct
    return [v for _, v in sorted(zip(nums, distinct))]


def _encode_column(values: np.ndarray, code_map: Mapping[str, int]) -> np.ndarray:
    reserved = len(code_map)
    return np.fromiter((code_map.get(v, reserved) for v in values), dtype=np.int32, count=len(values))


def ordinal_encode(table: RawFlowTable) -> EncodedDataset:
    """Drop ``drop`` columns, code categoricals and labels densely, carry numerics as passthrough."""
    schema = table.schema
    label_values = table.columns[schema.label_column]
    observed = category_order(label_values)
    if len(observed) < 2:
        raise DataError(f"label column {schema.label_column!r} has a single distinct value")
    if schema.label_classes:
        unknown = [v for v in observed if v not in schema.label_classes]
        if unknown:
            raise DataError(f"labels not in schema class list: {unknown}")
        class_names = tuple(c for c in schema.label_classes if c in set(observed))
    else:
        class_names = tuple(observed)
    return encode_with(table, None, class_names)


def encode_with(table: RawFlowTable, feature_meta: Sequence[FeatureMeta] | None,
                class_names: Sequence[str]) -> EncodedDataset:
    """Encode ``table``; with ``feature_meta`` given, reuse its code maps (unseen values get the reserved code)."""
    schema = table.schema
    class_map = {c: i for i, c in enumerate(class_names)}
    label_values = table.columns[schema.label_column]
    unseen = sorted(set(label_values) - set(class_map))
    if unseen:
        raise DataError(f"{table.source}: labels {unseen[:5]} were not seen at fit time")
    labels = np.fromiter((class_map[v] for v in label_values), dtype=np.int32, count=table.row_count)

    fitted = {m.name: m for m in feature_meta} if feature_meta is not None else None
    metas: list[FeatureMeta] = []
    cols: list[np.ndarray] = []
    for spec in schema.feature_columns:
        values = table.columns[spec.name]
        if spec.kind == NUMERIC:
            metas.append(FeatureMeta(spec.name, PASSTHROUGH, 0))
            cols.append(values.astype(np.float64))
            continue
        if fitted is not None:
            meta = fitted[spec.name]
        else:
            order = category_order(values)
            meta = FeatureMeta(spec.name, CATEGORICAL, len(order), {v: i for i, v in enumerate(order)})
        metas.append(meta)
        cols.append(_encode_column(values, meta.code_map))

    has_passthrough = any(m.kind == PASSTHROUGH for m in metas)
    dtype = np.float64 if has_passthrough else np.int32
    if cols:
        features = np.column_stack([c.astype(dtype) for c in cols])
    else:
        features = np.zeros((table.row_count, 0), dtype=dtype)
    ds = EncodedDataset(features, labels, tuple(metas), tuple(class_names))
    ds.validate(allow_reserved=fitted is not None)
    return ds
