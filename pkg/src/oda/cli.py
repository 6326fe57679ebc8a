"""Command-line front end: ``oda gen|train|predict|cluster|bench|inspect``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from . import data as data_mod
from .baselines import BaselineModel, batch_da_fit, kmeans_fit, svq_fit
from .core import OdaConfig, OdaModel
from .exceptions import ConfigError, DataError, DomainViolation, OdaError
from .metrics import f1_macro
from .report import FORMAT_VERSION

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

ODA_FLAGS = ("t_max", "t_min", "gamma", "k_max", "eps_c", "eps_n", "eps_r", "delta",
             "step_a", "step_b", "max_obs_per_level", "check_every")


def _add_data_args(p, labeled=True):
    p.add_argument("--data", required=True, help="CSV file")
    if labeled:
        p.add_argument("--label-column", default="last",
                       help="0-based index or 'last' (default: last)")
    p.add_argument("--positive-shift", action="store_true",
                   help="shift columns to strictly positive values")
    p.add_argument("--scale", action="store_true", help="min-max scale features to [0, 1]")
    p.add_argument("--skip-bad-rows", action="store_true")


def _add_train_args(p):
    p.add_argument("--algo", choices=bench.ALGORITHMS, default="oda")
    p.add_argument("--divergence", choices=("euclidean", "i-divergence"), default="euclidean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None, help="codebook size for svq/kmeans")
    p.add_argument("--n-obs", type=int, default=None, help="svq observations")
    p.add_argument("--init", choices=bench.INITS, default="sample")
    p.add_argument("--config", default=None,
                   help="JSON file of OdaConfig overrides (default: $ODA_CONFIG)")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", default=None, help="JSONL report to write")
    p.add_argument("--trace", default=None, help="CSV trace to write")
    for name in ODA_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), dest=name,
                       type=int if name in ("k_max", "max_obs_per_level", "check_every") else float,
                       default=None)
    p.add_argument("--gibbs", choices=("conditional", "plain", "class"), default=None)
    p.add_argument("--no-cross-class-split", dest="cross_class_split",
                   action="store_false", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oda", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    p.add_argument("kind", choices=sorted(data_mod.GENERATORS))
    p.add_argument("--n", type=int, default=1500)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--spread", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a classifier on a labeled CSV")
    _add_data_args(p)
    _add_train_args(p)

    p = sub.add_parser("cluster", help="train a clustering model on a CSV")
    _add_data_args(p, labeled=False)
    p.add_argument("--label-column", default=None,
                   help="column to drop before clustering (default: none)")
    _add_train_args(p)
    p.add_argument("--assignments", default=None, help="CSV of cluster indices to write")

    p = sub.add_parser("predict", help="apply a trained model to a CSV")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--unlabeled", action="store_true", help="the CSV has no label column")
    p.add_argument("--out", default=None, help="CSV of predictions (default: stdout)")

    p = sub.add_parser("bench", help="run a cross-validation experiment")
    p.add_argument("--config", default=None, help="experiment JSON (default: $ODA_CONFIG)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-jobs", type=int, default=None)

    p = sub.add_parser("inspect", help="pretty-print a model file")
    p.add_argument("model")
    p.add_argument("--codebook", action="store_true", help="list every codevector")
    return parser


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None


def _load(args, labeled=True):
    label_col = getattr(args, "label_column", None) if labeled else None
    if isinstance(label_col, str) and label_col != "last":
        label_col = int(label_col)
    return data_mod.load_csv(args.data, label_col, positive_shift=args.positive_shift,
                             skip_bad_rows=args.skip_bad_rows, scale=args.scale)


def _oda_overrides(args):
    path = bench.config_path(args.config)
    overrides = dict(_read_json(path)) if path else {}
    for name in (*ODA_FLAGS, "gibbs", "cross_class_split"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    return overrides


def _preprocessing(ds):
    return {k: ds.meta[k] for k in ("positive_shift", "minmax") if k in ds.meta}


def _apply_preprocessing(points, prep):
    if "minmax" in prep:
        points = (points - np.array(prep["minmax"]["min"])) / np.array(prep["minmax"]["span"])
    if "positive_shift" in prep:
        points = points + np.array(prep["positive_shift"])
    return points


def _train(args, classify):
    ds = _load(args, labeled=classify or args.label_column is not None)
    if classify and not ds.is_labeled:
        raise ConfigError("--label-column", "training a classifier needs labels")
    cfg = bench.validate_config({
        "dataset": {"source": "csv", "path": args.data},
        "algorithm": args.algo, "mode": "classification" if classify else "clustering",
        "divergence": args.divergence, "seed": args.seed, "oda": _oda_overrides(args),
        "k": args.k, "init": args.init, "n_obs": args.n_obs,
    })
    eval_set = (ds.points, ds.labels if classify else None)
    if args.algo == "oda":
        model, report = bench._fit_oda(cfg, ds, eval_set, args.seed, classify)
        doc = model.to_dict()
    elif args.algo == "batch-da":
        model, report = batch_da_fit(ds.points, bench._oda_config(cfg, ds), rng_seed=args.seed)
        doc = model.to_dict()
    else:
        k = args.k
        rng = np.random.default_rng(args.seed)
        if args.algo == "kmeans":
            if k is None:
                raise ConfigError("--k", "kmeans needs --k")
            model = kmeans_fit(ds.points, k, divergence=args.divergence, rng_seed=args.seed)
        else:
            if classify:
                classes = ds.class_set
                groups = [np.flatnonzero(ds.labels == c) for c in classes]
                labels = np.array(classes)
            else:
                if k is None:
                    raise ConfigError("--k", "clustering with svq needs --k")
                picks = rng.choice(len(ds), size=k, replace=False)
                groups, labels = [picks[[i]] for i in range(k)], None
            seeds = bench._initial_points(ds, groups, args.init, rng)
            model = svq_fit(seeds, data_mod.stream(ds.points, args.seed, ds.labels if classify else None),
                            args.n_obs or 10 * len(ds), args.divergence, labels=labels,
                            eval_set=eval_set)
        report = model.history
        doc = model.to_dict()
    report.rng_seed = args.seed
    doc["preprocessing"] = _preprocessing(ds)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_jsonl())
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(report.to_csv())
    summary = {"model": args.out, "k": int(model.n_codevectors)}
    _, dist = model.quantize(ds.points)
    summary["avg_distortion"] = float(dist.mean())
    if classify:
        pred = model.predict(ds.points)
        summary["train_accuracy"] = float(np.mean(pred == ds.labels))
    if not classify and getattr(args, "assignments", None):
        idx, _ = model.quantize(ds.points)
        np.savetxt(args.assignments, idx, fmt="%d", header="cluster", comments="")
    print(json.dumps(summary))
    return EXIT_OK


def load_model(path):
    doc = _read_json(path)
    kind = doc.get("kind")
    if kind == "oda":
        model = OdaModel.from_dict(doc)
    elif kind in ("svq", "kmeans", "batch-da"):
        model = BaselineModel.from_dict(doc)
    else:
        raise ConfigError("kind", f"unknown model kind {kind!r}")
    return model, doc.get("preprocessing", {})


def _predict(args):
    model, prep = load_model(args.model)
    ds = data_mod.load_csv(args.data, None if args.unlabeled else
                           (args.label_column if args.label_column == "last" else int(args.label_column)),
                           skip_bad_rows=args.skip_bad_rows)
    X = _apply_preprocessing(ds.points, prep)
    if model.is_classifier:
        out = model.predict(X)
        header = "label"
    else:
        out, _ = model.quantize(X)
        header = "cluster"
    lines = [header] + [str(v) for v in out]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if model.is_classifier and ds.is_labeled:
        stats = {"accuracy": float(np.mean(out == ds.labels)),
                 "f1_macro": f1_macro(ds.labels, out)}
        print(json.dumps(stats), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def _gen(args):
    kwargs = {"n": args.n}
    if args.noise is not None:
        if args.kind == "blobs":
            raise ConfigError("--noise", "blobs take --spread")
        kwargs["noise"] = args.noise
    if args.spread is not None:
        if args.kind != "blobs":
            raise ConfigError("--spread", "only blobs take --spread")
        kwargs["spread"] = args.spread
    ds = data_mod.GENERATORS[args.kind](rng_seed=args.seed, **kwargs)
    cols = [f"x{i}" for i in range(ds.d)] + ["label"]
    table = np.column_stack([ds.points, ds.labels])
    np.savetxt(args.out, table, delimiter=",", header=",".join(cols), comments="",
               fmt=["%.17g"] * ds.d + ["%d"])
    print(json.dumps({"out": args.out, "n": len(ds), "classes": ds.class_set}))
    return EXIT_OK


def _bench(args):
    path = bench.config_path(args.config)
    if not path:
        raise ConfigError("--config", "no experiment config given (flag or $ODA_CONFIG)")
    config = _read_json(path)
    if args.n_jobs is not None:
        config["n_jobs"] = args.n_jobs
    agg = bench.run_experiment(config, args.out)
    for name, stats in agg["metrics"].items():
        print(f"{name}: {stats['mean']:.6g} +/- {stats['std']:.3g}")
    return EXIT_OK


def _inspect(args):
    doc = _read_json(args.model)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError("format_version", f"unsupported version {doc.get('format_version')!r}")
    print(f"kind:        {doc.get('kind')}")
    if doc.get("kind") == "oda":
        cfg = doc["config"]
        sched = doc["schedule"]
        print(f"divergence:  {cfg['divergence']['kind']} (d={cfg['divergence']['dimension']})")
        print(f"temperature: {sched['current']:.6g} (t_max={sched['t_max']:.6g}, "
              f"t_min={sched['t_min']:.6g}, gamma={sched['gamma']})")
        print(f"classes:     {doc['classes'] or 'none (clustering)'}")
        print(f"codevectors: {len(doc['codebook'])}")
        levels = doc["history"]["levels"]
        print(f"levels:      {len(levels)}  samples seen: {doc['total_observations']}")
        if levels:
            print("K trace:     " + " ".join(str(lv["k_effective"]) for lv in levels))
        if args.codebook:
            for i, cv in enumerate(doc["codebook"]):
                mu = ", ".join(f"{v:.4g}" for v in cv["mu"])
                print(f"  [{i}] class={cv['class_label']} rho={cv['rho']:.4g} mu=({mu})")
    else:
        print(f"divergence:  {doc['divergence']['kind']}")
        print(f"codevectors: {len(doc['codebook'])}")
        if args.codebook:
            for i, mu in enumerate(doc["codebook"]):
                lab = "" if doc["labels"] is None else f" class={doc['labels'][i]}"
                print(f"  [{i}]{lab} mu=({', '.join(f'{v:.4g}' for v in mu)})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "gen": _gen,
        "train": lambda a: _train(a, classify=True),
        "cluster": lambda a: _train(a, classify=False),
        "predict": _predict,
        "bench": _bench,
        "inspect": _inspect,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DomainViolation, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OdaError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
