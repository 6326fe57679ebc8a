"""Cross-validation harness producing per-fold reports, traces and aggregates.

An experiment is described by a plain dict (usually loaded from JSON)::

    {
      "dataset": {"source": "blobs", "n": 1500, "seed": 0},
      "algorithm": "oda",            # oda | svq | kmeans | batch-da
      "mode": "classification",      # or "clustering"
      "divergence": "euclidean",
      "folds": 5,
      "seed": 0,
      "oda": {"t_min": null, ...},   # OdaConfig overrides
      "k": null,                     # codebook size for svq/kmeans
      "init": "sample",              # sample | mean | outside
      "n_jobs": 1
    }

Every file written carries ``format_version``; reports omit wall-clock
timings, which go to a separate ``timings.jsonl``.
"""
from __future__ import annotations

import copy
import json
import os
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import data as data_mod
from .baselines import batch_da_fit, kmeans_fit, svq_fit
from .core import OdaConfig, OdaModel
from .exceptions import ConfigError
from .metrics import f1_macro
from .report import FORMAT_VERSION, RunReport

# Published 5-fold accuracies (F1 for credit card) of external comparators.
REFERENCE_SCORES = {
    "gaussian": {"oda": 98.9, "svm": 79.5, "nn": 98.6, "rf": 98.7},
    "wbcd": {"oda": 90.7, "svm": 85.6, "nn": 92.7, "rf": 94.6},
    "credit": {"oda": 95.6, "svm": 69.1, "nn": 58.9, "rf": 62.8},
    "pima": {"oda": 70.5, "svm": 62.9, "nn": 76.3, "rf": 74.4},
}

DEFAULTS = {
    "algorithm": "oda",
    "mode": "classification",
    "divergence": "euclidean",
    "folds": 5,
    "seed": 0,
    "oda": {},
    "k": None,
    "init": "sample",
    "n_obs": None,
    "n_jobs": 1,
    "reference": None,
}
ALGORITHMS = ("oda", "svq", "kmeans", "batch-da")
MODES = ("classification", "clustering")
INITS = ("sample", "mean", "outside")
# execution settings that never change a result; kept out of the echoed config
NOT_ECHOED = ("output_dir", "n_jobs")


def validate_config(config: dict) -> dict:
    """Fill defaults and check every field, raising :class:`ConfigError`
    with the dotted path of the first bad field."""
    if not isinstance(config, dict):
        raise ConfigError("<root>", "experiment config must be a JSON object")
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(config))
    unknown = set(cfg) - set(DEFAULTS) - {"dataset", "output_dir"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    ds = cfg.get("dataset")
    if not isinstance(ds, dict):
        raise ConfigError("dataset", "required object")
    source = ds.get("source")
    if source not in (*data_mod.GENERATORS, "csv"):
        raise ConfigError("dataset.source", f"unknown source {source!r}")
    if source == "csv" and not ds.get("path"):
        raise ConfigError("dataset.path", "required for csv datasets")
    if cfg["algorithm"] not in ALGORITHMS:
        raise ConfigError("algorithm", f"must be one of {ALGORITHMS}")
    if cfg["mode"] not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}")
    if cfg["algorithm"] in ("kmeans", "batch-da") and cfg["mode"] != "clustering":
        raise ConfigError("mode", f"{cfg['algorithm']} supports clustering only")
    if cfg["init"] not in INITS:
        raise ConfigError("init", f"must be one of {INITS}")
    for key in ("folds", "seed", "n_jobs"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(key, "must be an integer")
    if cfg["folds"] < 2:
        raise ConfigError("folds", "at least two folds are needed")
    if cfg["k"] is not None and (not isinstance(cfg["k"], int) or cfg["k"] < 1):
        raise ConfigError("k", "must be a positive integer")
    if not isinstance(cfg["oda"], dict):
        raise ConfigError("oda", "must be an object of OdaConfig overrides")
    fields = set(OdaConfig.__dataclass_fields__) - {"divergence"}
    for key in cfg["oda"]:
        if key not in fields:
            raise ConfigError(f"oda.{key}", "unknown OdaConfig field")
    if cfg["reference"] is not None and cfg["reference"] not in REFERENCE_SCORES:
        raise ConfigError("reference", f"must be one of {sorted(REFERENCE_SCORES)}")
    return cfg


def load_dataset(source_cfg: dict) -> data_mod.Dataset:
    source_cfg = dict(source_cfg)
    source = source_cfg.pop("source")
    sub = source_cfg.pop("subsample", None)
    seed = source_cfg.pop("seed", 0)
    if source == "csv":
        ds = data_mod.load_csv(source_cfg["path"], source_cfg.get("label_column", "last"),
                               positive_shift=source_cfg.get("positive_shift", False),
                               skip_bad_rows=source_cfg.get("skip_bad_rows", False),
                               scale=source_cfg.get("scale", False))
    else:
        try:
            ds = data_mod.GENERATORS[source](rng_seed=seed, **source_cfg)
        except TypeError as exc:
            raise ConfigError("dataset", str(exc)) from None
    if sub:
        ds = data_mod.subsample(ds, int(sub), seed)
    return ds


def fold_seed(master_seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([master_seed, fold]).generate_state(1)[0])


def outside_seeds(ds: data_mod.Dataset, count: int) -> np.ndarray:
    """Starting points beyond the upper corner of the bounding box."""
    box = ds.bounding_box
    span = ds.delta_s
    return np.array([box[:, 1] + (0.5 + 0.25 * i) * span for i in range(count)])


def _initial_points(ds, groups, how, rng):
    if how == "outside":
        return list(outside_seeds(ds, len(groups)))
    if how == "mean":
        return [ds.points[g].mean(axis=0) for g in groups]
    return [ds.points[rng.choice(g)] for g in groups]


def _oda_config(cfg, train, **extra):
    overrides = dict(cfg["oda"])
    overrides.setdefault("max_obs_per_level", 10 * len(train))
    overrides.update(extra)
    return OdaConfig.from_domain(train.delta_s, train.d, cfg["divergence"], **overrides)


def _fit_oda(cfg, train, eval_set, seed, classify):
    rng = np.random.default_rng(seed)
    config = _oda_config(cfg, train)
    if classify:
        classes = train.class_set
        groups = [np.flatnonzero(train.labels == c) for c in classes]
        seeds = list(zip(_initial_points(train, groups, cfg["init"], rng), classes))
    else:
        seeds = _initial_points(train, [np.arange(len(train))], cfg["init"], rng)
    model = OdaModel.init(config, seeds, rng=rng)
    labels = train.labels if classify else None
    report = model.fit(data_mod.stream(train.points, seed, labels), eval_set=eval_set)
    return model, report


def run_fold(cfg: dict, ds: data_mod.Dataset, train_idx, test_idx, fold: int):
    """Train and evaluate one fold; returns ``(report, metrics)``."""
    seed = fold_seed(cfg["seed"], fold)
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    classify = cfg["mode"] == "classification"
    if classify and not train.is_labeled:
        raise ConfigError("mode", "classification needs a labeled dataset")
    eval_set = (test.points, test.labels if classify else None)
    algo = cfg["algorithm"]
    if algo == "oda":
        model, report = _fit_oda(cfg, train, eval_set, seed, classify)
    elif algo == "batch-da":
        model, report = batch_da_fit(train.points, _oda_config(cfg, train), rng_seed=seed)
    else:
        k = cfg["k"]
        if k is None and not (algo == "svq" and classify):
            # codebook size taken from an annealing run on the same fold
            _, da = batch_da_fit(train.points, _oda_config(cfg, train), rng_seed=seed)
            k = da.summary["k_final"]
        if algo == "kmeans":
            model = kmeans_fit(train.points, k, divergence=cfg["divergence"], rng_seed=seed)
        else:
            rng = np.random.default_rng(seed)
            if classify:
                classes = train.class_set
                groups = [np.flatnonzero(train.labels == c) for c in classes]
                seeds, labels = _initial_points(train, groups, cfg["init"], rng), np.array(classes)
            else:
                picks = rng.choice(len(train), size=k, replace=False)
                groups = [picks[[i]] for i in range(k)]
                seeds, labels = _initial_points(train, groups, cfg["init"], rng), None
            n_obs = cfg["n_obs"] or 10 * len(train)
            model = svq_fit(seeds, data_mod.stream(train.points, seed, train.labels if classify else None),
                            n_obs, cfg["divergence"], labels=labels, eval_set=eval_set)
        report = model.history
    report.rng_seed = seed
    report.config = _echo(cfg)
    metrics = {"distortion": float(model.quantize(test.points)[1].mean()),
               "k_final": int(getattr(model, "n_codevectors")),
               "samples_seen": int(report.levels[-1].samples_seen_cumulative) if len(report) else 0}
    if classify:
        pred = model.predict(test.points)
        metrics["accuracy"] = float(np.mean(pred == test.labels))
        metrics["f1_macro"] = f1_macro(test.labels, pred)
    report.summary = dict(report.summary, **metrics)
    return report, metrics


def _echo(cfg):
    return {k: v for k, v in cfg.items() if k not in NOT_ECHOED}


def aggregate(fold_metrics: list[dict]) -> dict:
    """Mean and unbiased (n-1) standard deviation of every metric."""
    out = {}
    for key in fold_metrics[0]:
        vals = np.array([m[key] for m in fold_metrics], dtype=float)
        out[key] = {"mean": float(vals.mean()),
                    "std": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                    "values": vals.tolist()}
    return out


def run_experiment(config: dict, output_dir=None) -> dict:
    """Run every fold and write the artifacts; returns the aggregate document."""
    cfg = validate_config(config)
    output_dir = output_dir or cfg.get("output_dir")
    ds = load_dataset(cfg["dataset"])
    folds = data_mod.kfold(ds, cfg["folds"], cfg["seed"])
    if cfg["n_jobs"] == 1:
        results = [run_fold(cfg, ds, tr, te, i) for i, (tr, te) in enumerate(folds)]
    else:
        results = Parallel(n_jobs=cfg["n_jobs"])(
            delayed(run_fold)(cfg, ds, tr, te, i) for i, (tr, te) in enumerate(folds))
    reports = [r for r, _ in results]
    metrics = [m for _, m in results]
    agg = {
        "format_version": FORMAT_VERSION,
        "std_estimator": "sample standard deviation (n-1 denominator)",
        "config": _echo(cfg),
        "folds": len(folds),
        "metrics": aggregate(metrics),
    }
    if cfg["reference"]:
        agg["reference_scores"] = REFERENCE_SCORES[cfg["reference"]]
    if output_dir:
        write_artifacts(Path(output_dir), agg, reports)
    return agg


def write_artifacts(out: Path, agg: dict, reports: list[RunReport]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for i, rep in enumerate(reports):
        (out / f"fold{i}.jsonl").write_text(rep.to_jsonl())
        (out / f"fold{i}_trace.csv").write_text(rep.to_csv())
    (out / "aggregate.json").write_text(json.dumps(agg, indent=1, sort_keys=True) + "\n")
    with open(out / "timings.jsonl", "w") as fh:
        for i, rep in enumerate(reports):
            fh.write(json.dumps({"fold": i, "wall_time_ms": [r.wall_time_ms for r in rep.levels]}) + "\n")


def config_path(cli_value=None):
    """Experiment config location: the CLI value, else ``$ODA_CONFIG``."""
    return cli_value or os.environ.get("ODA_CONFIG")
