"""Split, train, evaluate and retry across every (learner, target, fragment) cell."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .core import (TARGET_SHORT, DataError, Dataset, ModelHyperparams, RangeError, coerce,
                   fmt_float, format_value, parse_kv, read_dataset)
from .datagen import BallisticConfig
from .learners import LEARNERS, TrainedModel, fit
from .metrics import EVAL_COLUMNS, EvalReport, evaluate

log = logging.getLogger(__name__)

MIN_ROWS = 10
# fields whose default is None and so carry no type to coerce against
_OPTIONAL_TYPES = {"svr_sigma": float, "dtr_max_depth": int}


class TooFewRows(DataError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str = ""
    split_seed: int = 1
    train_fraction: float = 0.7
    learners: tuple[str, ...] = LEARNERS
    hyperparams: ModelHyperparams = field(default_factory=ModelHyperparams)
    error_threshold_lon: float = math.inf
    error_threshold_lat: float = math.inf
    error_threshold_vel: float = math.inf
    max_retries: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "learners", tuple(self.learners))
        if not 0.0 < self.train_fraction < 1.0:
            raise RangeError("train_fraction", self.train_fraction)
        if self.max_retries < 0:
            raise RangeError("max_retries", self.max_retries)
        bad = [name for name in self.learners if name not in LEARNERS]
        if bad or not self.learners:
            raise RangeError("learners", self.learners)

    def threshold(self, target: str) -> float:
        return getattr(self, f"error_threshold_{target}")

    def flat(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "hyperparams"}
        d.update({f.name: getattr(self.hyperparams, f.name) for f in fields(ModelHyperparams)})
        return d


# --------------------------------------------------------------- config files

def dump_config(run: RunConfig | None = None, ballistic: BallisticConfig | None = None) -> str:
    """All settings as ``key=value`` lines, run keys first."""
    run = run or RunConfig()
    ballistic = ballistic or BallisticConfig()
    lines = ["# run"]
    lines += [f"{k}={format_value(v)}" for k, v in run.flat().items()]
    lines.append("# data generation")
    lines += [f"{k}={format_value(v)}" for k, v in asdict(ballistic).items()]
    return "\n".join(lines) + "\n"


def _coerce_key(key: str, value: str, default):
    if key in _OPTIONAL_TYPES:
        return None if value.lower() == "none" else _OPTIONAL_TYPES[key](value)
    if default == ():
        default = (0.0,)
    return coerce(value, default)


def load_config(text: str) -> tuple[RunConfig, BallisticConfig]:
    """Parse one flat key=value file into run and data-generation settings."""
    raw = parse_kv(text)
    run_defaults = RunConfig().flat()
    ball_defaults = asdict(BallisticConfig())
    run_kw, hp_kw, ball_kw = {}, {}, {}
    hp_names = {f.name for f in fields(ModelHyperparams)}
    for key, value in raw.items():
        if key in run_defaults:
            target = hp_kw if key in hp_names else run_kw
            default = run_defaults[key]
        elif key in ball_defaults:
            target, default = ball_kw, ball_defaults[key]
        else:
            raise DataError(f"unknown config key {key!r}")
        try:
            target[key] = _coerce_key(key, value, default)
        except ValueError as exc:
            raise DataError(f"config key {key}: {exc}") from None
    try:
        hp = ModelHyperparams(**hp_kw)
        return RunConfig(hyperparams=hp, **run_kw), BallisticConfig(**ball_kw)
    except RangeError as exc:
        raise DataError(f"config key {exc.field}: bad value {exc.value!r}") from None


def read_config(path) -> tuple[RunConfig, BallisticConfig]:
    return load_config(Path(path).read_text(encoding="utf-8"))


# -------------------------------------------------------------------- split

def split_indices(n: int, seed: int, fraction: float = 0.7) -> tuple[np.ndarray, np.ndarray]:
    if n < MIN_ROWS:
        raise TooFewRows(f"need at least {MIN_ROWS} rows to split, got {n}")
    if not 0.0 < fraction < 1.0:
        raise RangeError("train_fraction", fraction)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fraction * n))
    return perm[:n_train], perm[n_train:]


def split(d: Dataset, seed: int | None = None, fraction: float | None = None):
    seed = d.split_seed if seed is None else seed
    fraction = d.train_fraction if fraction is None else fraction
    tr, te = split_indices(len(d), seed, fraction)
    return d.subset(tr), d.subset(te)


def dataset_digest(d: Dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(d.X).tobytes())
    h.update(np.ascontiguousarray(d.Y).tobytes())
    return h.hexdigest()


# ------------------------------------------------------------------ run_all

@dataclass
class CellResult:
    learner: str
    target: str
    fragment_id: int
    model: TrainedModel | None = None
    reports: list[EvalReport] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None

    @property
    def report(self) -> EvalReport | None:
        return self.reports[-1] if self.reports else None


@dataclass
class RunResult:
    config: RunConfig
    cells: list[CellResult]
    n_train: int
    n_test: int
    digest: str

    @property
    def reports(self) -> list[EvalReport]:
        return [r for c in self.cells for r in c.reports]

    def cell(self, learner: str, target: str, fragment_id: int) -> CellResult:
        for c in self.cells:
            if (c.learner, c.target, c.fragment_id) == (learner, target, fragment_id):
                return c
        raise KeyError((learner, target, fragment_id))


def perturb(learner: str, hp: ModelHyperparams) -> ModelHyperparams:
    """The single knob turned for a retry."""
    if learner == "dtr":
        depth = hp.dtr_max_depth
        return hp if depth is None else hp.replace(dtr_max_depth=depth + 1)
    if learner == "mlp":
        return hp.replace(mlp_max_iter=max(1, 2 * hp.mlp_max_iter))
    if learner == "svr":
        return hp.replace(svr_c=2.0 * hp.svr_c)
    raise ValueError(f"unknown learner {learner!r}")


def _run_cell(learner, target, frag, train, test, cfg: RunConfig, fit_fn) -> CellResult:
    cell = CellResult(learner, target, frag)
    y_tr = train.target(frag, target)
    y_te = test.target(frag, target)
    hp = cfg.hyperparams
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            hp = perturb(learner, hp)
        try:
            model = fit_fn(learner, train.X, y_tr, hp, cfg.seed)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            log.warning("%s/%s/fragment %d attempt %d failed: %s",
                        learner, target, frag, attempt, exc)
            cell.errors.append(f"attempt {attempt}: {type(exc).__name__}: {exc}")
            continue
        meta = {"target": target, "fragment_id": frag, "attempt": attempt,
                "split_seed": cfg.split_seed, "train_fraction": cfg.train_fraction,
                "n_train": len(train), "seed": cfg.seed}
        tm = TrainedModel(learner, model, hp, meta)
        rep = evaluate(learner, target, frag, y_te, tm.predict(test.X), attempt)
        cell.model = tm
        cell.reports.append(rep)
        if not rep.mse > cfg.threshold(target):
            break
        if attempt < cfg.max_retries:
            log.info("%s/%s/fragment %d: test MSE %g above threshold, retrying",
                     learner, target, frag, rep.mse)
    return cell


def run_all(cfg: RunConfig, dataset: Dataset | None = None, fit_fn: Callable = fit) -> RunResult:
    """Fit and test every cell in (learner, target, fragment) order.

    A cell whose learner raises is recorded with its error and the run
    carries on. ``fit_fn(learner, X, y, hp, seed)`` can be swapped out in
    tests.
    """
    if dataset is None:
        if not cfg.dataset_path:
            raise DataError("no dataset given")
        dataset = read_dataset(cfg.dataset_path, cfg.split_seed, cfg.train_fraction)
    train, test = split(dataset, cfg.split_seed, cfg.train_fraction)
    cells = [_run_cell(learner, target, frag, train, test, cfg, fit_fn)
             for learner in cfg.learners
             for target in TARGET_SHORT
             for frag in range(1, dataset.n_fragments + 1)]
    return RunResult(cfg, cells, len(train), len(test), dataset_digest(dataset))


# ------------------------------------------------------------- model store

MANIFEST = "manifest.json"


def model_filename(learner: str, target: str, fragment_id: int) -> str:
    return f"{learner}_{target}_{fragment_id}.json"


def save_models(result: RunResult, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for c in result.cells:
        entry = {"learner": c.learner, "target": c.target, "fragment_id": c.fragment_id,
                 "file": None, "errors": list(c.errors)}
        if c.ok:
            entry["file"] = model_filename(c.learner, c.target, c.fragment_id)
            c.model.save(directory / entry["file"])
        entries.append(entry)
    cfg = result.config
    manifest = {"split_seed": cfg.split_seed, "train_fraction": cfg.train_fraction,
                "n_train": result.n_train, "n_test": result.n_test,
                "dataset_sha256": result.digest, "learners": list(cfg.learners),
                "models": entries}
    (directory / MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n",
                                      encoding="utf-8")
    write_reports(result.reports, directory / "attempts.csv")
    return directory


def load_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{directory}: no {MANIFEST}; not a model directory") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from None


def load_models(directory) -> tuple[dict, dict]:
    """``(manifest, {(learner, target, fragment_id): TrainedModel})``."""
    manifest = load_manifest(directory)
    models = {}
    for e in manifest["models"]:
        if e["file"]:
            models[(e["learner"], e["target"], int(e["fragment_id"]))] = \
                TrainedModel.load(Path(directory) / e["file"])
    return manifest, models


def write_reports(reports, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_COLUMNS)
        for r in reports:
            d = r.row()
            w.writerow([fmt_float(d[c]) if isinstance(d[c], float) else d[c]
                        for c in EVAL_COLUMNS])


def evaluate_models(models: dict, test: Dataset) -> list[EvalReport]:
    out = []
    for (learner, target, frag), tm in sorted(models.items(), key=_cell_order):
        y = test.target(frag, target)
        out.append(evaluate(learner, target, frag, y, tm.predict(test.X),
                            int(tm.meta.get("attempt", 0))))
    return out


def _cell_order(item):
    (learner, target, frag), _ = item
    rank = LEARNERS.index(learner) if learner in LEARNERS else len(LEARNERS)
    return rank, TARGET_SHORT.index(target), frag


def write_accuracy_table(reports, path) -> None:
    """One row per (target, fragment) with a column group per learner."""
    learners = [name for name in ("svr", "mlp", "dtr") if any(r.learner == name for r in reports)]
    by_key = {(r.learner, r.target, r.fragment_id): r for r in reports}
    keys = sorted({(r.target, r.fragment_id) for r in reports},
                  key=lambda k: (TARGET_SHORT.index(k[0]), k[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "fragment_id"]
                   + [f"{m}_{name}" for name in learners for m in ("r2", "mse", "mae")])
        for target, frag in keys:
            row = [target, frag]
            for name in learners:
                r = by_key.get((name, target, frag))
                row += ["", "", ""] if r is None else [fmt_float(r.r2), fmt_float(r.mse),
                                                       fmt_float(r.mae)]
            w.writerow(row)


# ------------------------------------------------------------------ timing

@dataclass(frozen=True)
class TimingRow:
    learner: str
    quantity: str  # "position_fit", "velocity_fit" or "total"
    mean: float
    std: float
    samples: tuple[float, ...]


def timing_report(dataset: Dataset, cfg: RunConfig | None = None, runs: int = 5,
                  fit_fn: Callable = fit, clock: Callable[[], float] = time.perf_counter):
    """Wall time over ``runs`` repeats of each learner's 21 fits.

    ``position_fit`` covers the longitude and latitude models,
    ``velocity_fit`` the velocity models, and ``total`` also includes
    splitting and scoring. ``std`` is the sample standard deviation.
    """
    if runs < 2:
        raise ValueError("runs must be at least 2")
    cfg = cfg or RunConfig()
    rows = []
    for learner in cfg.learners:
        samples = {"position_fit": [], "velocity_fit": [], "total": []}
        for _ in range(runs):
            t0 = clock()
            train, test = split(dataset, cfg.split_seed, cfg.train_fraction)
            spent = {"position_fit": 0.0, "velocity_fit": 0.0}
            for target in TARGET_SHORT:
                key = "velocity_fit" if target == "vel" else "position_fit"
                for frag in range(1, dataset.n_fragments + 1):
                    y = train.target(frag, target)
                    t1 = clock()
                    model = fit_fn(learner, train.X, y, cfg.hyperparams, cfg.seed)
                    spent[key] += clock() - t1
                    if model is not None:
                        TrainedModel(learner, model, cfg.hyperparams).predict(test.X)
            samples["position_fit"].append(spent["position_fit"])
            samples["velocity_fit"].append(spent["velocity_fit"])
            samples["total"].append(clock() - t0)
        for quantity, vals in samples.items():
            rows.append(TimingRow(learner, quantity, statistics.fmean(vals),
                                  statistics.stdev(vals), tuple(vals)))
    return rows


def write_timing(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["learner", "quantity", "mean_s", "std_s", "runs"])
        for r in rows:
            w.writerow([r.learner, r.quantity, fmt_float(r.mean), fmt_float(r.std),
                        len(r.samples)])
