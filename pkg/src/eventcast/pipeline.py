"""Command implementations: preprocess, train, sweep, forecast, report.

Every command reads and writes plain files under ``config.output_dir``.
All outputs are byte-identical across reruns with the same config and
inputs, except the wall-clock files ``timings.csv`` and
``report/table3.csv`` / ``report/table4.csv``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from pathlib import Path
from typing import Callable

import numpy as np

from .config import PipelineConfig
from .errors import ConfigError, DataError
from .evaluate import evaluate, split_indices, stratified_split, stopwatch
from .event_space import EventSpaceSpec, extract_domains, forecast, format_sci
from .feature_select import chi2_scores, kbest_sweep, rfe_sweep, sweep_to_csv
from .ingest import EncodedDataset, category_order, load_csv, resolve_schema
from .learners import LearnerParams, load_model, save_model, train
from .learners.params import DEFAULT_GRID
from .preprocess import PROCESSED, UNPROCESSED, Preprocessor, load_dataset, save_dataset, take_rows
from .resample import resample

Echo = Callable[[str], None]

DATA_DIR = "data"
MODEL_FILE = "model.json"
TRAIN_REPORT = "train_report.json"
TIMINGS_FILE = "timings.csv"
VARIANT_LABELS = {UNPROCESSED: "Unprocessed", PROCESSED: "VarianceReduced", "reduced": "FeatureReduced"}
# keys of the tuning grid that apply to each learner
TUNABLE = {"gbt": tuple(DEFAULT_GRID), "tree": ("max_depth",), "forest": ("max_depth",), "nbayes": ()}


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _stem(cfg: PipelineConfig, variant: str, part: str) -> Path:
    return cfg.out / DATA_DIR / f"{variant}_{part}"


def _preprocessor_path(cfg: PipelineConfig, variant: str) -> Path:
    return cfg.out / DATA_DIR / f"{variant}_preprocessor.json"


def _require_file(path: str, key: str) -> Path:
    if not path:
        raise ConfigError(f"{key} is not set")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{key}: file not found: {p}")
    return p


# ---------------------------------------------------------------- preprocess

def cmd_preprocess(cfg: PipelineConfig, echo: Echo = print) -> dict:
    """Encode and discretize the dataset; write train/test artifacts per variant."""
    ds_cfg = cfg.dataset
    path = _require_file(ds_cfg.path, "dataset.path")
    schema = resolve_schema(ds_cfg.schema, path, ds_cfg.label_column, ds_cfg.drop)
    table = load_csv(path, schema)
    if ds_cfg.test_path:
        train_table = table
        test_table = load_csv(_require_file(ds_cfg.test_path, "dataset.test_path"), schema)
    else:
        labels = table.columns[schema.label_column]
        order = category_order(labels)
        index = {v: i for i, v in enumerate(order)}
        codes = np.fromiter((index[v] for v in labels), dtype=np.int64, count=len(labels))
        tr, te = split_indices(codes, len(order), ds_cfg.test_fraction, cfg.module_seed("split"), order)
        train_table, test_table = take_rows(table, tr), take_rows(table, te)

    variants = [PROCESSED] + ([UNPROCESSED] if cfg.preprocess.unprocessed else [])
    summary = {
        "schema": schema.name,
        "dataset": path.stem if schema.name == "infer" else schema.name,
        "source": str(path),
        "source_features": len(schema.feature_columns),
        "rows": {"train": train_table.row_count, "test": test_table.row_count},
        "dropped_rows": table.dropped,
        "variants": {},
    }
    for variant in variants:
        pre, train_ds = Preprocessor.fit(train_table, variant, cfg.preprocess.variance_threshold)
        test_ds = pre.transform(test_table)
        save_dataset(train_ds, _stem(cfg, variant, "train"), {"variant": variant})
        save_dataset(test_ds, _stem(cfg, variant, "test"), {"variant": variant})
        _write(_preprocessor_path(cfg, variant), _dump(pre.to_dict()))
        summary["variants"][variant] = {
            "features": train_ds.n_features,
            "dropped_features": list(pre.discretizer.dropped_features),
            "classes": list(train_ds.class_names),
        }
    _write(cfg.out / "preprocess_summary.json", _dump(summary))
    n_out = summary["variants"][PROCESSED]["features"]
    echo(f"features: {summary['source_features']} -> {n_out} "
         f"(variance threshold {cfg.preprocess.variance_threshold})")
    echo(f"rows: train {train_table.row_count}, test {test_table.row_count}, "
         f"dropped {table.dropped}")
    return summary


# ---------------------------------------------------------------- train

def _load_variant(cfg: PipelineConfig, variant: str) -> tuple[EncodedDataset, EncodedDataset]:
    return load_dataset(_stem(cfg, variant, "train")), load_dataset(_stem(cfg, variant, "test"))


def _has_variant(cfg: PipelineConfig, variant: str) -> bool:
    return Path(f"{_stem(cfg, variant, 'train')}.json").is_file()


def _fit(train_ds, test_ds, params: LearnerParams, workers: int):
    with stopwatch() as t:
        model = train(train_ds, params, workers=workers)
    cm, report = evaluate(model, test_ds)
    return model, cm, report, t[0]


def tune(train_ds: EncodedDataset, params: LearnerParams, validation_fraction: float, seed: int,
         workers: int = 1, grid: dict | None = None) -> tuple[LearnerParams, list[dict]]:
    """Grid search on a stratified validation split of ``train_ds`` by macro F1.

    Ties keep the earlier grid point; grid order is the product of the keys
    in sorted order.
    """
    grid = DEFAULT_GRID if grid is None else grid
    keys = sorted(k for k in grid if k in TUNABLE[params.learner])
    if not keys:
        return params, []
    fit_ds, val_ds = stratified_split(train_ds, validation_fraction, seed)
    best, best_f1, rows = params, -1.0, []
    for values in itertools.product(*(grid[k] for k in keys)):
        cand = params.with_(**dict(zip(keys, values)))
        model = train(fit_ds, cand, workers=workers)
        _, report = evaluate(model, val_ds)
        rows.append({**dict(zip(keys, values)), "accuracy": report.accuracy, "macro_f1": report.macro_f1})
        if report.macro_f1 > best_f1:
            best, best_f1 = cand, report.macro_f1
    return best, rows


def _metric_row(variant: str, learner: str, report) -> list:
    return [variant, learner, f"{report.accuracy:.6f}", f"{report.macro_precision:.6f}",
            f"{report.macro_recall:.6f}", f"{report.macro_f1:.6f}"]


def _select(cfg: PipelineConfig, train_ds, train_rs, test_ds, params, scores) -> list[str]:
    k = cfg.selection.k
    if k == 0 or k >= train_ds.n_features:
        return list(train_ds.feature_names)
    if cfg.selection.method == "kbest":
        top = set(scores.top(k))
        return [n for n in train_ds.feature_names if n in top]
    order, _ = rfe_sweep(train_rs, test_ds, params, cfg.selection.step, min_features=k)
    survivors = set(order[-k:])
    return [n for n in train_ds.feature_names if n in survivors]


def cmd_train(cfg: PipelineConfig, echo: Echo = print) -> dict:
    """Train every configured learner, pick the winner, reduce features, save the bundle."""
    train_ds, test_ds = _load_variant(cfg, PROCESSED)
    plan = cfg.resample_plan()
    train_rs = resample(train_ds, plan)
    workers = cfg.workers

    results, timings, metric_rows = {}, [], []
    for name in cfg.learner.learners:
        params = cfg.learner_params(name)
        model, cm, report, secs = _fit(train_rs, test_ds, params, workers)
        results[name] = (params, model, cm, report, secs)
        timings.append([PROCESSED, name, f"{secs:.3f}"])
        metric_rows.append(_metric_row(PROCESSED, name, report))
        echo(f"{name:>7}: accuracy {report.accuracy:.4f}  macro F1 {report.macro_f1:.4f}  "
             f"time {secs:.2f}s")
    # best macro F1; exact ties go to the faster learner
    winner = max(results, key=lambda n: (results[n][3].macro_f1, -results[n][4]))
    params, model, cm, report, _ = results[winner]

    tuning_rows: list[dict] = []
    if cfg.learner.tune:
        tuned, tuning_rows = tune(train_rs, params, cfg.learner.validation_fraction,
                                  cfg.module_seed("tune"), workers)
        if tuned != params:
            params = tuned
            model, cm, report, secs = _fit(train_rs, test_ds, params, workers)
            timings.append([PROCESSED, f"{winner} (tuned)", f"{secs:.3f}"])
    full_report = report

    scores = chi2_scores(train_ds)
    selected = _select(cfg, train_ds, train_rs, test_ds, params, scores)
    if len(selected) < train_ds.n_features:
        model, cm, report, secs = _fit(train_rs.select_named(selected), test_ds.select_named(selected),
                                       params, workers)
        timings.append(["reduced", winner, f"{secs:.3f}"])
        metric_rows.append(_metric_row("reduced", winner, report))

    variants = []
    if _has_variant(cfg, UNPROCESSED):
        u_train, u_test = _load_variant(cfg, UNPROCESSED)
        u_train_rs = resample(u_train, plan)
        u_reports = {}
        for name in cfg.learner.learners:
            _, _, u_report, secs = _fit(u_train_rs, u_test, cfg.learner_params(name), workers)
            u_reports[name] = u_report
            timings.append([UNPROCESSED, name, f"{secs:.3f}"])
            metric_rows.append(_metric_row(UNPROCESSED, name, u_report))
        variants.append(_variant_row(UNPROCESSED, u_train, None, u_reports[winner]))
    variants.append(_variant_row(PROCESSED, train_ds, None, full_report))
    variants.append(_variant_row("reduced", train_ds, selected, report))

    spec = extract_domains(train_ds, selected)
    preprocessor = json.loads(_preprocessor_path(cfg, PROCESSED).read_text(encoding="utf-8"))
    model.bundle = {
        "preprocessor": preprocessor,
        "selected_features": selected,
        "event_space": spec.to_dict(),
        "test_accuracy": report.accuracy,
        "test_macro_f1": report.macro_f1,
        "winner": winner,
        "seed": cfg.seed,
    }
    out = cfg.out
    save_model(model, out / MODEL_FILE)
    summary = {
        "winner": winner,
        "params": params.to_dict(),
        "resample": {"mode": plan.mode, "train_rows": train_rs.n_rows,
                     "class_counts": train_rs.class_counts().tolist()},
        "learners": {n: _report_dict(r[3]) for n, r in results.items()},
        "tuning": tuning_rows,
        "selected_features": selected,
        "final": _report_dict(report),
        "variants": variants,
    }
    _write(out / TRAIN_REPORT, _dump(summary))
    _write(out / "metrics.csv",
           _csv(["variant", "learner", "accuracy", "precision", "recall", "f1"], metric_rows))
    _write(out / TIMINGS_FILE, _csv(["variant", "learner", "seconds"], timings))
    _write(out / "confusion.csv", cm.to_csv())
    _write(out / "class_metrics.csv", report.to_csv())
    _write(out / "chi2_scores.csv", scores.to_csv())
    echo(f"winner: {winner}  features {len(selected)}  test accuracy {report.accuracy:.4f}  "
         f"macro F1 {report.macro_f1:.4f}  event space {spec.size_sci()}")
    return summary


def _report_dict(report) -> dict:
    d = report.to_dict()
    d.pop("train_wall_time", None)  # wall time lives in timings.csv only
    return d


def _variant_row(variant: str, train_ds: EncodedDataset, selected, report) -> dict:
    spec = extract_domains(train_ds, selected)
    return {
        "variant": variant,
        "label": VARIANT_LABELS[variant],
        "features": len(spec.names),
        "space_size": str(spec.size),
        "space_size_sci": spec.size_sci(),
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
    }


# ---------------------------------------------------------------- sweep

def cmd_sweep(cfg: PipelineConfig, echo: Echo = print) -> Path:
    """Accuracy/precision/recall/F1 against the number of retained features."""
    train_ds, test_ds = _load_variant(cfg, PROCESSED)
    train_rs = resample(train_ds, cfg.resample_plan())
    params = cfg.learner_params(cfg.selection.learner)
    sel = cfg.selection
    n = train_ds.n_features
    k_max = min(sel.k_max or n, n)
    k_min = min(sel.k_min, k_max)
    if sel.method == "kbest":
        rows = kbest_sweep(train_rs, test_ds, params, range(k_min, k_max + 1), workers=cfg.workers)
    else:
        # elimination always starts from every feature; k_max only bounds k-best sweeps
        order, rows = rfe_sweep(train_rs, test_ds, params, sel.step, min_features=k_min)
        _write(cfg.out / "rfe_order.csv", _csv(["position", "feature"], list(enumerate(order, 1))))
    path = _write(cfg.out / f"sweep_{sel.method}.csv", sweep_to_csv(rows))
    best = max(rows, key=lambda r: (r.accuracy, -r.k))
    echo(f"{sel.method} sweep: {len(rows)} rows, best accuracy {best.accuracy:.4f} at k={best.k}")
    return path


# ---------------------------------------------------------------- forecast

def cmd_forecast(cfg: PipelineConfig, echo: Echo = print) -> dict:
    """Classify the bundle's event space and write normalized and accuracy-weighted fractions."""
    model_path = cfg.out / MODEL_FILE
    if not model_path.is_file():
        raise DataError(f"{model_path}: no model bundle (run `train` first)")
    model = load_model(model_path)
    try:
        spec = EventSpaceSpec.from_dict(model.bundle["event_space"])
        accuracy = float(model.bundle["test_accuracy"])
    except KeyError as exc:
        raise DataError(f"{model_path}: bundle lacks {exc.args[0]!r}") from None
    es = cfg.event_space
    result = forecast(model, spec, accuracy, n=es.n_samples, seed=cfg.module_seed("events"),
                      limit=es.limit, marginals=es.marginals, workers=cfg.workers)
    _write(cfg.out / "forecast.json", result.to_json(full_size=es.full_size))
    _write(cfg.out / "forecast.csv", result.to_csv())
    echo(f"event space size: {format_sci(result.space_size)} ({len(spec.names)} features, "
         f"{result.mode}, {result.sample_count} events)")
    if es.full_size:
        echo(f"exact size: {result.space_size}")
    for c, f, w in zip(result.class_names, result.event_fraction, result.weighted):
        echo(f"  {c:>16}: fraction {f:.4f}  weighted {w:.4f}")
    return result.to_dict(es.full_size)


# ---------------------------------------------------------------- report

def _read_csv(path: Path) -> list[list[str]]:
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def cmd_report(cfg: PipelineConfig, echo: Echo = print) -> list[Path]:
    """Collect run artifacts into summary tables under ``report/``."""
    out = cfg.out
    train_path = out / TRAIN_REPORT
    if not train_path.is_file():
        raise DataError(f"{train_path}: no training report (run `train` first)")
    summary = json.loads(train_path.read_text(encoding="utf-8"))
    pre = json.loads((out / "preprocess_summary.json").read_text(encoding="utf-8"))
    name = pre.get("dataset", "data")
    rdir = out / "report"
    written = []

    t2 = [[f"{name}-{v['label']}", v["features"], v["space_size_sci"], f"{v['accuracy']:.3f}",
           f"{v['macro_f1']:.3f}"] for v in summary["variants"]]
    header = ["Data", "Features", "Size Of Event Space", "Accuracy Score", "F1 score"]
    written.append(_write(rdir / "table2.csv", _csv(header, t2)))
    echo(" | ".join(header))
    for row in t2:
        echo(" | ".join(map(str, row)))

    if (out / TIMINGS_FILE).is_file():
        rows = _read_csv(out / TIMINGS_FILE)[1:]
        for variant, fname in ((PROCESSED, "table3.csv"), (UNPROCESSED, "table4.csv")):
            sel = [[learner, secs] for v, learner, secs in rows if v == variant]
            if sel:
                written.append(_write(rdir / fname, _csv(["Model", "Time (s)"], sel)))
    for src, dst in (("chi2_scores.csv", "table5.csv"), ("sweep_kbest.csv", "table6.csv"),
                     ("sweep_rfe.csv", "table7.csv")):
        if (out / src).is_file():
            written.append(_write(rdir / dst, (out / src).read_text(encoding="utf-8")))
    if (out / "forecast.csv").is_file():
        written.append(_write(rdir / "forecast.csv", (out / "forecast.csv").read_text(encoding="utf-8")))
    echo(f"wrote {len(written)} tables to {rdir}")
    return written
