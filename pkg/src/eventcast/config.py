"""Pipeline configuration: TOML sections, dotted CLI overrides, derived module seeds."""
from __future__ import annotations

import os
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .event_space import DEFAULT_LIMIT, DEFAULT_SAMPLES, EMPIRICAL, UNIFORM
from .learners.params import LEARNERS, LearnerParams
from .resample import ResamplePlan
from .rng import derive_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

THREADS_ENV = "EVENTCAST_THREADS"


@dataclass
class DatasetConfig:
    path: str = ""
    test_path: str = ""  # empty: hold out test_fraction of `path`, stratified
    schema: str = "infer"
    label_column: str = "attack_cat"
    drop: list[str] = field(default_factory=list)
    test_fraction: float = 0.3


@dataclass
class PreprocessConfig:
    variance_threshold: float = 0.0
    unprocessed: bool = False  # also build the raw-ordinal comparison variant


@dataclass
class ResampleConfig:
    mode: str = "none"
    majority_cap_ratio: float = 5.0
    minority_target_ratio: float = 0.2
    seed: int = -1  # negative: derived from the global seed


@dataclass
class LearnerConfig:
    learners: list[str] = field(default_factory=lambda: list(LEARNERS))
    max_depth: int = 6
    n_rounds: int = 100
    eta: float = 0.3
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    n_trees: int = 100
    feature_subsample: int = 0  # 0: ceil(sqrt(n_features))
    bootstrap: bool = True
    alpha: float = 1.0
    tune: bool = False
    validation_fraction: float = 0.2


@dataclass
class SelectionConfig:
    method: str = "kbest"
    k: int = 0  # 0 keeps every feature
    step: int = 1
    k_min: int = 5
    k_max: int = 0  # 0: number of features
    learner: str = "gbt"  # learner used by sweeps


@dataclass
class EventSpaceConfig:
    limit: int = DEFAULT_LIMIT
    n_samples: int = DEFAULT_SAMPLES
    marginals: str = UNIFORM
    full_size: bool = False  # also print the exact integer size


@dataclass
class PipelineConfig:
    seed: int = 0
    output_dir: str = "eventcast-out"
    workers: int = 1
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    event_space: EventSpaceConfig = field(default_factory=EventSpaceConfig)

    def validate(self) -> "PipelineConfig":
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.dataset.test_fraction < 1:
            raise ConfigError("dataset.test_fraction must be strictly between 0 and 1")
        if not 0 < self.learner.validation_fraction < 1:
            raise ConfigError("learner.validation_fraction must be strictly between 0 and 1")
        if self.preprocess.variance_threshold < 0:
            raise ConfigError("preprocess.variance_threshold must be >= 0")
        bad = [x for x in self.learner.learners if x not in LEARNERS]
        if bad or not self.learner.learners:
            raise ConfigError(f"learner.learners must be a nonempty subset of {LEARNERS}")
        if self.selection.method not in ("kbest", "rfe"):
            raise ConfigError("selection.method must be 'kbest' or 'rfe'")
        if self.selection.learner not in LEARNERS:
            raise ConfigError(f"selection.learner must be one of {LEARNERS}")
        if self.selection.k < 0 or self.selection.k_max < 0 or self.selection.k_min < 1:
            raise ConfigError("selection.k and k_max must be >= 0, k_min >= 1")
        if self.selection.step < 1:
            raise ConfigError("selection.step must be >= 1")
        if self.event_space.marginals not in (UNIFORM, EMPIRICAL):
            raise ConfigError("event_space.marginals must be 'uniform' or 'empirical'")
        if self.event_space.limit < 0 or self.event_space.n_samples < 1:
            raise ConfigError("event_space.limit must be >= 0 and n_samples >= 1")
        self.resample_plan()
        self.learner_params()
        return self

    # seeds for each consumer come from the one global seed
    def module_seed(self, label: str) -> int:
        return derive_seed(self.seed, label)

    def resample_plan(self) -> ResamplePlan:
        r = self.resample
        seed = r.seed if r.seed >= 0 else self.module_seed("resample")
        return ResamplePlan(r.mode, r.majority_cap_ratio, r.minority_target_ratio, seed)

    def learner_params(self, learner: str = "gbt") -> LearnerParams:
        c = self.learner
        return LearnerParams(learner=learner, max_depth=c.max_depth, n_rounds=c.n_rounds, eta=c.eta,
                             reg_lambda=c.reg_lambda, min_child_weight=c.min_child_weight,
                             n_trees=c.n_trees, feature_subsample=c.feature_subsample or None,
                             bootstrap=c.bootstrap, alpha=c.alpha, seed=self.module_seed("learner"))

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    def to_dict(self) -> dict:
        return asdict(self)


def _sections(cfg_cls=PipelineConfig):
    return {f.name: f for f in fields(cfg_cls)}


def _field_default(f):
    if f.default is not MISSING:
        return f.default
    return f.default_factory()


def _coerce(value: Any, like: Any, key: str) -> Any:
    """Convert a TOML value or flag string to the type of the default ``like``."""
    try:
        if isinstance(like, bool):
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.strip().lower() in ("true", "1", "yes", "on"):
                return True
            if isinstance(value, str) and value.strip().lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(like, int):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if isinstance(like, float):
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if isinstance(like, list):
            if isinstance(value, str):
                return [v.strip() for v in value.split(",") if v.strip()]
            if isinstance(value, list) and all(isinstance(v, str) for v in value):
                return list(value)
            raise ValueError(value)
        if isinstance(like, str):
            if not isinstance(value, str):
                raise ValueError(value)
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot use {value!r} (expected {type(like).__name__})") from None
    raise ConfigError(f"{key}: unsupported option type")


def config_keys() -> dict[str, Any]:
    """Every dotted config key with its default value."""
    keys = {}
    for name, f in _sections().items():
        default = _field_default(f)
        if is_dataclass(default):
            for sub in fields(default):
                keys[f"{name}.{sub.name}"] = getattr(default, sub.name)
        else:
            keys[name] = default
    return keys


def apply_values(cfg: PipelineConfig, values: Mapping[str, Any]) -> PipelineConfig:
    """Set dotted keys (``"resample.mode"``) on ``cfg``; unknown keys are errors."""
    defaults = config_keys()
    for key, value in values.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        coerced = _coerce(value, defaults[key], key)
        if "." in key:
            section, name = key.split(".", 1)
            setattr(getattr(cfg, section), name, coerced)
        else:
            setattr(cfg, key, coerced)
    return cfg


def _flatten(doc: Mapping, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            if prefix:
                raise ConfigError(f"config nesting too deep at {key!r}")
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None,
                env: Mapping[str, str] | None = None) -> PipelineConfig:
    """Defaults, then the TOML file, then ``overrides``, then ``EVENTCAST_THREADS``."""
    cfg = PipelineConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: invalid TOML ({exc})") from None
        apply_values(cfg, _flatten(doc))
    if overrides:
        apply_values(cfg, overrides)
    env = os.environ if env is None else env
    threads = env.get(THREADS_ENV)
    if threads:
        try:
            cfg.workers = int(threads)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {threads!r}") from None
    return cfg.validate()


def dump_toml(cfg: PipelineConfig) -> str:
    """Render ``cfg`` as TOML (top-level scalars first, then one table per section)."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return repr(v)

    d = cfg.to_dict()
    lines = [f"{k} = {fmt(v)}" for k, v in d.items() if not isinstance(v, dict)]
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines.extend(f"{sk} = {fmt(sv)}" for sk, sv in v.items())
    return "\n".join(lines) + "\n"
