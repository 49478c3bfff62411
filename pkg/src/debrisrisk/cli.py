"""Command-line entry point: ``debrisrisk <command> [flags]``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline, risk
from .core import (FEATURE_NAMES, TARGET_SHORT, DataError, FeatureVector, LabelVector,
                   RangeError, fmt_float, normalize_lon, read_dataset, write_dataset)
from .datagen import BallisticConfig, NoImpact, generate_dataset
from .fragments import default_fragment_set, read_fragments
from .learners import ConvergenceError, DivergenceError
from .metrics import summarize_errors

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _configs(path):
    if path is None:
        return pipeline.RunConfig(), BallisticConfig()
    return pipeline.read_config(path)


# ---------------------------------------------------------------- commands

def cmd_gen_data(args) -> int:
    _, ball = _configs(args.config)
    d = generate_dataset(args.n, args.seed, ball)
    write_dataset(d, args.out)
    if args.grid_out or args.gdp_out:
        cells, gdp = risk.synthetic_grid(args.cells, args.seed)
        if args.grid_out:
            risk.write_grid(cells, args.grid_out)
        if args.gdp_out:
            risk.write_gdp(gdp, args.gdp_out)
    return EXIT_OK


def cmd_train(args) -> int:
    run, _ = _configs(args.config)
    d = read_dataset(args.data, run.split_seed, run.train_fraction)
    result = pipeline.run_all(run, d)
    pipeline.save_models(result, args.models_out)
    failed = [c for c in result.cells if not c.ok]
    for c in failed:
        print(f"{c.learner}/{c.target}/fragment {c.fragment_id}: {c.errors[-1]}",
              file=sys.stderr)
    return EXIT_DATA if failed else EXIT_OK


def _test_partition(data_path, manifest):
    d = read_dataset(data_path, manifest["split_seed"], manifest["train_fraction"])
    if pipeline.dataset_digest(d) != manifest["dataset_sha256"]:
        raise DataError(f"{data_path}: not the dataset these models were trained on")
    return pipeline.split(d)[1]


def cmd_evaluate(args) -> int:
    manifest, models = pipeline.load_models(args.models)
    test = _test_partition(args.data, manifest)
    pipeline.write_accuracy_table(pipeline.evaluate_models(models, test), args.out)
    return EXIT_OK


def _read_features(spec: str) -> np.ndarray:
    """Features from a CSV file with the six named columns, or one inline row."""
    path = Path(spec)
    if path.is_file():
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in FEATURE_NAMES if c not in (reader.fieldnames or ())]
            if missing:
                raise DataError(f"{spec}: missing feature column(s) {','.join(missing)}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append([float(row[c]) for c in FEATURE_NAMES])
                except ValueError as exc:
                    raise DataError(f"{spec}:{lineno}: {exc}") from None
    else:
        try:
            rows = [[float(v) for v in spec.split(",")]]
        except ValueError:
            raise DataError(f"--features: {spec!r} is neither a file nor 6 numbers") from None
        if len(rows[0]) != len(FEATURE_NAMES):
            raise DataError(f"--features: expected {len(FEATURE_NAMES)} values "
                            f"({','.join(FEATURE_NAMES)}), got {len(rows[0])}")
    if not rows:
        raise DataError(f"{spec}: no feature rows")
    for r in rows:
        FeatureVector.from_array(np.array(r)).validate()
    return np.array(rows)


def _predict_landings(models_dir, X, learner) -> list[list[LabelVector]]:
    """Per feature row, one LabelVector per fragment, clipped to valid ranges."""
    manifest, models = pipeline.load_models(models_dir)
    frags = sorted({k[2] for k in models if k[0] == learner})
    if not frags:
        raise DataError(f"{models_dir}: no {learner} models")
    cols = {}
    for frag in frags:
        for t in TARGET_SHORT:
            tm = models.get((learner, t, frag))
            if tm is None:
                raise DataError(f"{models_dir}: missing {learner} model for {t} of fragment {frag}")
            cols[(frag, t)] = tm.predict(X)
    out = []
    for i in range(X.shape[0]):
        out.append([LabelVector(normalize_lon(cols[(f, "lon")][i]),
                                float(np.clip(cols[(f, "lat")][i], -90.0, 90.0)),
                                max(float(cols[(f, "vel")][i]), 0.0)) for f in frags])
    return out


def cmd_predict(args) -> int:
    X = _read_features(args.features)
    landings = _predict_landings(args.models, X, args.learner)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["row", "fragment_id", "landing_lon", "landing_lat", "landing_velocity"])
    for i, row in enumerate(landings):
        for frag, lab in enumerate(row, start=1):
            w.writerow([i, frag, fmt_float(lab.landing_lon), fmt_float(lab.landing_lat),
                        fmt_float(lab.landing_velocity)])
    return EXIT_OK


def _read_landings(path) -> list[list[LabelVector]]:
    cols = ("fragment_id", "landing_lon", "landing_lat", "landing_velocity")
    scenarios: dict[int, dict[int, LabelVector]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in cols if c not in (reader.fieldnames or ())]
        if missing:
            raise DataError(f"{path}: missing column(s) {','.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                scen = int(row.get("scenario") or row.get("row") or 0)
                lab = LabelVector(normalize_lon(float(row["landing_lon"])),
                                  float(row["landing_lat"]), float(row["landing_velocity"]))
                lab.validate()
                scenarios.setdefault(scen, {})[int(row["fragment_id"])] = lab
            except (ValueError, RangeError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not scenarios:
        raise DataError(f"{path}: no landings")
    return [[v for _, v in sorted(s.items())] for _, s in sorted(scenarios.items())]


def cmd_assess(args) -> int:
    if args.landings is None and (args.models is None or args.features is None):
        raise UsageError("assess: give --landings, or both --models and --features")
    if args.landings is not None and (args.models or args.features):
        raise UsageError("assess: --landings cannot be combined with --models/--features")
    fragments = read_fragments(args.fragments) if args.fragments else default_fragment_set()
    if args.landings:
        scenarios = _read_landings(args.landings)
    else:
        scenarios = _predict_landings(args.models, _read_features(args.features), args.learner)
    grid = risk.read_grid(args.grid)
    gdp = risk.read_gdp(args.gdp)
    reports = []
    for k, landings in enumerate(scenarios):
        if len(landings) != len(fragments):
            raise DataError(f"scenario {k}: {len(landings)} landings for "
                            f"{len(fragments)} fragments")
        reports += risk.assess(fragments, landings, grid, gdp, scenario=k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    risk.write_risk_csv(reports, out / "risk.csv")
    risk.write_geojson(reports, out / "risk.geojson")
    return EXIT_OK


def cmd_report(args) -> int:
    run, _ = _configs(args.config)
    manifest, models = pipeline.load_models(args.models)
    test = _test_partition(args.data, manifest)
    summaries = summarize_errors(pipeline.evaluate_models(models, test))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "errors.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "fragment_id", "mean_abs_error_lon", "mean_abs_error_lat",
                    "mean_abs_error_vel", "n_test"])
        for s in summaries:
            w.writerow([s.learner, s.fragment_id, fmt_float(s.mean_abs_error_lon),
                        fmt_float(s.mean_abs_error_lat), fmt_float(s.mean_abs_error_vel),
                        s.n_test])
    if args.runs:
        d = read_dataset(args.data, manifest["split_seed"], manifest["train_fraction"])
        learners = tuple(manifest.get("learners", run.learners))
        cfg = pipeline.RunConfig(split_seed=manifest["split_seed"],
                                 train_fraction=manifest["train_fraction"],
                                 learners=learners, hyperparams=run.hyperparams, seed=run.seed)
        pipeline.write_timing(pipeline.timing_report(d, cfg, args.runs), out / "timing.csv")
    return EXIT_OK


def cmd_config(args) -> int:
    if not args.dump:
        raise UsageError("config: nothing to do (use --dump)")
    sys.stdout.write(pipeline.dump_config(*_configs(args.config)))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="debrisrisk",
                description="Predict debris landing points and score ground risk.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen-data", help="simulate a synthetic landing dataset")
    g.add_argument("--n", type=int, default=1489, help="number of rows (default 1489)")
    g.add_argument("--seed", type=int, default=1, help="sampling seed (default 1)")
    g.add_argument("--out", required=True, help="dataset CSV to write")
    g.add_argument("--config", help="key=value file with data-generation settings")
    g.add_argument("--grid-out", help="also write a synthetic population grid CSV here")
    g.add_argument("--gdp-out", help="also write a matching GDP CSV here")
    g.add_argument("--cells", type=int, default=200, help="synthetic grid size (default 200)")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="fit all learner/target/fragment models")
    t.add_argument("--data", required=True, help="dataset CSV")
    t.add_argument("--config", help="key=value run configuration")
    t.add_argument("--models-out", required=True, help="directory for model files")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score saved models on the held-out rows")
    e.add_argument("--data", required=True, help="dataset CSV used for training")
    e.add_argument("--models", required=True, help="model directory from train")
    e.add_argument("--out", required=True, help="accuracy table CSV to write")
    e.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="print predicted landings for entry states")
    pr.add_argument("--models", required=True, help="model directory from train")
    pr.add_argument("--features", required=True,
                    help="CSV with the six feature columns, or one comma-separated row")
    pr.add_argument("--learner", choices=("svr", "dtr", "mlp"), default="dtr",
                    help="which learner's models to use (default dtr)")
    pr.set_defaults(func=cmd_predict)

    a = sub.add_parser("assess", help="score ground risk of landed fragments")
    a.add_argument("--landings", help="CSV: fragment_id,landing_lon,landing_lat,"
                                      "landing_velocity[,scenario]")
    a.add_argument("--models", help="model directory (with --features)")
    a.add_argument("--features", help="entry states to predict landings for")
    a.add_argument("--learner", choices=("svr", "dtr", "mlp"), default="dtr",
                   help="learner used with --models (default dtr)")
    a.add_argument("--fragments", help="fragment table CSV (default: built-in set)")
    a.add_argument("--grid", required=True, help="population grid CSV")
    a.add_argument("--gdp", required=True, help="GDP CSV")
    a.add_argument("--out", required=True, help="directory for risk.csv and risk.geojson")
    a.set_defaults(func=cmd_assess)

    r = sub.add_parser("report", help="write per-fragment error and timing tables")
    r.add_argument("--data", required=True, help="dataset CSV used for training")
    r.add_argument("--models", required=True, help="model directory from train")
    r.add_argument("--out", required=True, help="directory for errors.csv and timing.csv")
    r.add_argument("--config", help="key=value run configuration for the timing runs")
    r.add_argument("--runs", type=int, default=5,
                   help="timing repeats; 0 skips timing.csv (default 5)")
    r.set_defaults(func=cmd_report)

    c = sub.add_parser("config", help="print configuration")
    c.add_argument("--dump", action="store_true", help="print every setting as key=value")
    c.add_argument("--config", help="start from this file instead of the defaults")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "runs", 0) == 1:
            raise UsageError("report: --runs must be 0 or at least 2")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, NoImpact, ConvergenceError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
