from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping

from ..errors import ConfigError

LEARNERS = ("tree", "forest", "gbt", "nbayes")


@dataclass(frozen=True)
class LearnerParams:
    learner: str = "gbt"
    max_depth: int = 6
    n_rounds: int = 100
    eta: float = 0.3
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    n_trees: int = 100
    feature_subsample: int | None = None  # None -> ceil(sqrt(n_features))
    bootstrap: bool = True
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learner not in LEARNERS:
            raise ConfigError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.n_rounds < 0:
            raise ConfigError("n_rounds must be >= 0")
        if not self.eta > 0:
            raise ConfigError("eta must be > 0")
        if self.reg_lambda < 0 or self.min_child_weight < 0:
            raise ConfigError("reg_lambda and min_child_weight must be >= 0")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.feature_subsample is not None and self.feature_subsample < 1:
            raise ConfigError("feature_subsample must be >= 1")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")

    def with_(self, **changes) -> "LearnerParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "LearnerParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown learner parameters: {sorted(unknown)}")
        return cls(**dict(d))


# tuning grid for the selected learner
DEFAULT_GRID = {
    "max_depth": (4, 6, 8),
    "eta": (0.1, 0.3),
    "n_rounds": (100, 200),
    "reg_lambda": (1.0,),
}
