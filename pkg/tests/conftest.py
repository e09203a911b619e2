from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from eventcast.ingest import CATEGORICAL, EncodedDataset, FeatureMeta

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

DATA_DIR = Path(__file__).parent / "data"


def make_ds(X, y, cards=None, names=None, class_names=None) -> EncodedDataset:
    """Discrete dataset from code arrays; cardinalities default to max code + 1."""
    X = np.asarray(X, dtype=np.int32)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.int32)
    F = X.shape[1]
    if cards is None:
        cards = [int(X[:, j].max()) + 1 if X.size else 1 for j in range(F)]
    names = names or [f"f{j}" for j in range(F)]
    n_classes = int(y.max()) + 1 if class_names is None else len(class_names)
    class_names = class_names or [f"c{i}" for i in range(n_classes)]
    meta = tuple(FeatureMeta(names[j], CATEGORICAL, int(cards[j]),
                             {str(i): i for i in range(int(cards[j]))}) for j in range(F))
    return EncodedDataset(X, y, meta, tuple(class_names))


def random_ds(rng: np.random.Generator, n: int, F: int, C: int, max_card: int = 6) -> EncodedDataset:
    cards = rng.integers(2, max_card + 1, F)
    X = np.column_stack([rng.integers(0, c, n) for c in cards])
    y = rng.integers(0, C, n)
    y[:C] = np.arange(C)  # every class present
    return make_ds(X, y, cards, class_names=[f"c{i}" for i in range(C)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory) -> Path:
    from eventcast.synth import write_synth
    return write_synth(tmp_path_factory.mktemp("synth") / "flows.csv", 3000, 6, seed=11)


# wall-clock outputs; everything else a run writes must be reproducible byte for byte
WALL_CLOCK = {"timings.csv", "report/table3.csv", "report/table4.csv"}


def quiet(_msg: str) -> None:
    pass


def run_pipeline(out_dir: Path, csv_path: Path, **overrides) -> Path:
    """preprocess, train, both sweeps, forecast and report, in process."""
    from eventcast.config import load_config
    from eventcast.pipeline import cmd_forecast, cmd_preprocess, cmd_report, cmd_sweep, cmd_train
    values = {"dataset.path": str(csv_path), "output_dir": str(out_dir)}
    values.update(overrides)
    cfg = load_config(None, values, env={})
    cmd_preprocess(cfg, quiet)
    cmd_train(cfg, quiet)
    cmd_sweep(cfg, quiet)
    rfe = load_config(None, {**values, "selection.method": "rfe", "selection.step": 3}, env={})
    cmd_sweep(rfe, quiet)
    cmd_forecast(cfg, quiet)
    cmd_report(cfg, quiet)
    return Path(out_dir)


def artifacts(out_dir: Path) -> dict[str, bytes]:
    return {p.relative_to(out_dir).as_posix(): p.read_bytes()
            for p in sorted(Path(out_dir).rglob("*")) if p.is_file()}


PIPELINE_OVERRIDES = {"seed": 1, "preprocess.unprocessed": True, "selection.k": 10}


@pytest.fixture(scope="session")
def pipeline_pair(tmp_path_factory, synth_csv) -> tuple[Path, Path]:
    """Two full pipeline runs from the same seed on the synthetic flows."""
    base = tmp_path_factory.mktemp("pipeline")
    return (run_pipeline(base / "a", synth_csv, **PIPELINE_OVERRIDES),
            run_pipeline(base / "b", synth_csv, **PIPELINE_OVERRIDES))
