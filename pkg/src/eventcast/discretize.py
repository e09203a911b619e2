"""Magnitude / leading-digit discretization of continuous flow features."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .ingest import CATEGORICAL, MAG, PASSTHROUGH, SIG, EncodedDataset, FeatureMeta

ZERO_KEY = "zero"


@dataclass(frozen=True)
class LogSigPair:
    mag: int
    sig: int


def log_sig(x) -> LogSigPair:
    """Decimal order of magnitude and leading significant digit of ``x >= 0``.

    Works on the shortest decimal representation of ``x``, so 0.3 yields
    (-1, 3) rather than falling foul of binary rounding.
    """
    try:
        d = Decimal(str(x)) if not isinstance(x, Decimal) else x
    except InvalidOperation:
        raise ValueError(f"not a number: {x!r}") from None
    if not d.is_finite():
        raise ValueError(f"log_sig needs a finite value, got {x!r}")
    if d < 0:
        raise ValueError(f"log_sig needs a nonnegative value, got {x!r}")
    if d == 0:
        return LogSigPair(0, 0)
    d = d.normalize()
    return LogSigPair(d.adjusted(), int(d.as_tuple().digits[0]))


def log_sig_array(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`log_sig` over a float array; agrees with the scalar form exactly.

    Values whose scaled mantissa lies near a digit boundary (exact powers,
    round numbers, binary noise such as 0.30000000000000004) are resolved
    by the scalar routine, once per distinct value.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("log_sig_array needs finite nonnegative values")
    mag = np.zeros(x.shape, dtype=np.int64)
    sig = np.zeros(x.shape, dtype=np.int64)
    pos = np.flatnonzero(x > 0)
    if not pos.size:
        return mag, sig
    v = x.ravel()[pos]
    m = np.floor(np.log10(v)).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # subnormal inputs underflow 10**m to 0; the scalar path below handles them
        raw = v / np.power(10.0, m.astype(np.float64))
        near = ~(np.abs(raw - np.round(raw)) >= 1e-9) | (raw < 1.0) | (raw >= 10.0)
        m_out, s_out = m.copy(), np.where(near, 0, np.floor(np.nan_to_num(raw))).astype(np.int64)
    if near.any():
        values, inverse = np.unique(v[near], return_inverse=True)
        pairs = [log_sig(float(u)) for u in values]
        m_out[near] = np.array([p.mag for p in pairs], dtype=np.int64)[inverse]
        s_out[near] = np.array([p.sig for p in pairs], dtype=np.int64)[inverse]
    mag.ravel()[pos] = m_out
    sig.ravel()[pos] = s_out
    return mag, sig


def _mag_order(keys) -> list[str]:
    nonzero = sorted((int(k) for k in keys if k != ZERO_KEY))
    return ([ZERO_KEY] if ZERO_KEY in keys else []) + [str(k) for k in nonzero]


@dataclass
class DiscretizerState:
    """Everything needed to replay the discretization on new rows."""

    mag_range: dict[str, tuple[int, int]] = field(default_factory=dict)
    derived: dict[str, tuple[FeatureMeta, FeatureMeta]] = field(default_factory=dict)
    variances: dict[str, float] = field(default_factory=dict)
    dropped_features: list[str] = field(default_factory=list)
    threshold: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mag_range": {k: list(v) for k, v in self.mag_range.items()},
            "derived": {k: [a.to_dict(), b.to_dict()] for k, (a, b) in self.derived.items()},
            "variances": dict(self.variances),
            "dropped_features": list(self.dropped_features),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DiscretizerState":
        return cls(
            mag_range={k: (int(v[0]), int(v[1])) for k, v in d["mag_range"].items()},
            derived={k: (FeatureMeta.from_dict(a), FeatureMeta.from_dict(b))
                     for k, (a, b) in d["derived"].items()},
            variances={k: float(v) for k, v in d["variances"].items()},
            dropped_features=list(d["dropped_features"]),
            threshold=float(d["threshold"]),
        )


def _codes(keys: Sequence[str], code_map: Mapping[str, int]) -> np.ndarray:
    reserved = len(code_map)
    return np.fromiter((code_map.get(k, reserved) for k in keys), dtype=np.int32, count=len(keys))


def expand_log_sig(dataset: EncodedDataset, state: DiscretizerState | None = None) -> EncodedDataset:
    """Replace every passthrough column with ``"<name> log"`` and ``"<name> sig"`` columns.

    Derived columns are appended after the discrete ones, in source order.
    Code maps already present in ``state`` are replayed (new values get the
    reserved code); otherwise they are fitted here and recorded in ``state``.
    """
    if state is None:
        state = DiscretizerState()
    pass_idx = [j for j, m in enumerate(dataset.feature_meta) if m.kind == PASSTHROUGH]
    if not pass_idx:
        raise DataError("expand_log_sig: dataset has no passthrough columns")
    keep_idx = [j for j, m in enumerate(dataset.feature_meta) if m.kind != PASSTHROUGH]

    cols = [dataset.features[:, j].astype(np.int32) for j in keep_idx]
    metas = [dataset.feature_meta[j] for j in keep_idx]
    for j in pass_idx:
        name = dataset.feature_meta[j].name
        try:
            mag, sig = log_sig_array(dataset.features[:, j])
        except ValueError as exc:
            raise DataError(f"column {name!r}: {exc}") from None
        mag_keys = [ZERO_KEY if s == 0 else str(m) for m, s in zip(mag.tolist(), sig.tolist())]
        sig_keys = [str(s) for s in sig.tolist()]
        if name not in state.derived:
            positive = mag[sig > 0]
            if positive.size:
                state.mag_range[name] = (int(positive.min()), int(positive.max()))
            else:
                state.mag_range[name] = (0, 0)
            mag_order = _mag_order(set(mag_keys))
            sig_order = sorted(set(sig_keys), key=int)
            state.derived[name] = (
                FeatureMeta(f"{name} log", MAG, len(mag_order),
                            {k: i for i, k in enumerate(mag_order)}, name),
                FeatureMeta(f"{name} sig", SIG, len(sig_order),
                            {k: i for i, k in enumerate(sig_order)}, name),
            )
        mag_meta, sig_meta = state.derived[name]
        cols.append(_codes(mag_keys, mag_meta.code_map))
        cols.append(_codes(sig_keys, sig_meta.code_map))
        metas.extend([mag_meta, sig_meta])

    features = np.column_stack(cols) if cols else np.zeros((dataset.n_rows, 0), np.int32)
    return replace(dataset, features=features.astype(np.int32), feature_meta=tuple(metas))


def variance_filter(dataset: EncodedDataset, threshold: float = 0.0,
                    state: DiscretizerState | None = None) -> EncodedDataset:
    """Remove features whose population variance is ``<= threshold``."""
    if threshold < 0:
        raise ValueError("variance threshold must be >= 0")
    variances = dataset.features.astype(np.float64).var(axis=0) if dataset.n_rows else \
        np.zeros(dataset.n_features)
    keep = [j for j in range(dataset.n_features) if variances[j] > threshold]
    if not keep:
        raise DataError(f"variance filter (threshold {threshold}) removed every feature")
    dropped = [m.name for j, m in enumerate(dataset.feature_meta) if variances[j] <= threshold]
    if state is not None:
        state.threshold = float(threshold)
        state.variances.update({m.name: float(variances[j]) for j, m in enumerate(dataset.feature_meta)})
        state.dropped_features.extend(d for d in dropped if d not in state.dropped_features)
    return dataset.select_features(keep)


def ordinalize_passthrough(dataset: EncodedDataset,
                           fitted: Mapping[str, FeatureMeta] | None = None) -> EncodedDataset:
    """Code each passthrough column by its raw distinct values (the undiscretized variant).

    With ``fitted`` given (name -> meta from an earlier call), its maps are replayed.
    """
    cols, metas = [], []
    for j, m in enumerate(dataset.feature_meta):
        col = dataset.features[:, j]
        if m.kind != PASSTHROUGH:
            cols.append(col.astype(np.int32))
            metas.append(m)
            continue
        keys = [repr(float(v)) for v in col]
        if fitted is not None and m.name in fitted:
            meta = fitted[m.name]
        else:
            order = sorted(set(keys), key=float)
            meta = FeatureMeta(m.name, CATEGORICAL, len(order), {k: i for i, k in enumerate(order)})
        cols.append(_codes(keys, meta.code_map))
        metas.append(meta)
    features = np.column_stack(cols).astype(np.int32) if cols else \
        np.zeros((dataset.n_rows, 0), np.int32)
    return replace(dataset, features=features, feature_meta=tuple(metas))


def magnitude_bound(state: DiscretizerState, name: str) -> int:
    """Upper bound on |log codes| x |sig codes| for one source column."""
    lo, hi = state.mag_range[name]
    return (hi - lo + 2) * 10

