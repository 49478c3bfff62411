import dataclasses
import math

import numpy as np
import pytest

from debrisrisk.core import DataError, Dataset, ModelHyperparams
from debrisrisk.datagen import BallisticConfig
from debrisrisk.learners import fit
from debrisrisk.pipeline import (RunConfig, TooFewRows, dump_config, evaluate_models,
                                 load_config, load_models, run_all, save_models, split,
                                 split_indices, timing_report, write_accuracy_table)

FAST = ModelHyperparams(mlp_max_iter=30, mlp_hidden_sizes=(8,))


def counting(calls):
    def fit_fn(learner, X, y, hp, seed):
        calls.append((learner, hp))
        return fit(learner, X, y, hp, seed)
    return fit_fn


def test_split_counts_and_cover():
    tr, te = split_indices(10, seed=3, fraction=0.7)
    assert len(tr) == 7 and len(te) == 3
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(10))
    tr2, te2 = split_indices(10, seed=3, fraction=0.7)
    np.testing.assert_array_equal(tr, tr2)
    np.testing.assert_array_equal(te, te2)
    with pytest.raises(TooFewRows):
        split_indices(9, seed=3)


def test_split_datasets_partition_rows(small_dataset):
    train, test = split(small_dataset, 5, 0.7)
    rows = sorted(map(tuple, np.vstack([train.X, test.X])))
    assert rows == sorted(map(tuple, small_dataset.X))


def test_run_all_fits_63_models(small_dataset):
    calls = []
    res = run_all(RunConfig(hyperparams=FAST), small_dataset, fit_fn=counting(calls))
    assert len(calls) == 63 and len(res.cells) == 63
    assert all(c.ok and len(c.reports) == 1 for c in res.cells)
    assert res.n_train == 42 and res.n_test == 18


def test_infinite_threshold_never_retries(small_dataset):
    calls = []
    cfg = RunConfig(hyperparams=FAST, max_retries=3, learners=("dtr",))
    run_all(cfg, small_dataset, fit_fn=counting(calls))
    assert len(calls) == 21


def test_retry_doubles_mlp_iterations(small_dataset):
    calls = []
    hp = dataclasses.replace(FAST, mlp_max_iter=2)
    cfg = RunConfig(hyperparams=hp, learners=("mlp",), max_retries=1, error_threshold_vel=0.0)
    res = run_all(cfg, small_dataset, fit_fn=counting(calls))
    cell = res.cell("mlp", "vel", 1)
    assert [r.attempt for r in cell.reports] == [0, 1]
    assert cell.model.hyperparams.mlp_max_iter == 4
    assert cell.model.meta["attempt"] == 1
    assert len(calls) == 14 + 2 * 7
    assert res.cell("mlp", "lat", 1).model.hyperparams.mlp_max_iter == 2


def test_failing_cell_does_not_abort(small_dataset):
    def flaky(learner, X, y, hp, seed):
        if learner == "svr":
            raise ArithmeticError("boom")
        return fit(learner, X, y, hp, seed)
    res = run_all(RunConfig(hyperparams=FAST), small_dataset, fit_fn=flaky)
    bad = [c for c in res.cells if not c.ok]
    assert len(bad) == 21 and all("boom" in c.errors[0] for c in bad)
    assert sum(c.ok for c in res.cells) == 42


def test_run_all_is_reproducible(small_dataset):
    a = run_all(RunConfig(hyperparams=FAST), small_dataset)
    b = run_all(RunConfig(hyperparams=FAST), small_dataset)
    assert a.reports == b.reports
    assert [c.model.dumps() for c in a.cells] == [c.model.dumps() for c in b.cells]


def test_scalers_see_only_training_rows(small_dataset):
    cfg = RunConfig(hyperparams=FAST, learners=("svr", "mlp"))
    res = run_all(cfg, small_dataset)
    train, _ = split(small_dataset, cfg.split_seed, cfg.train_fraction)
    for c in res.cells:
        m = c.model.model
        np.testing.assert_allclose(m.feature_scaler.mean, train.X.mean(axis=0), rtol=1e-12)
        y = train.target(c.fragment_id, c.target)
        np.testing.assert_allclose(m.target_scaler.mean, [y.mean()], rtol=1e-12)


def test_model_store_round_trip(small_dataset, tmp_path):
    res = run_all(RunConfig(hyperparams=FAST), small_dataset)
    save_models(res, tmp_path)
    manifest, models = load_models(tmp_path)
    assert manifest["n_train"] == 42 and len(models) == 63
    _, test = split(small_dataset, 1, 0.7)
    reps = evaluate_models(models, test)
    assert sorted(reps, key=str) == sorted(res.reports, key=str)
    write_accuracy_table(reps, tmp_path / "acc.csv")
    lines = (tmp_path / "acc.csv").read_text().splitlines()
    assert lines[0].split(",")[:5] == ["target", "fragment_id", "r2_svr", "mse_svr", "mae_svr"]
    assert len(lines) == 1 + 21


def test_timing_noop_fits():
    d = Dataset(np.zeros((20, 6)), np.zeros((20, 7, 3)))
    ticks = iter(range(10**6))
    rows = timing_report(d, RunConfig(learners=("dtr",)), runs=5,
                         fit_fn=lambda *a: None, clock=lambda: float(next(ticks)))
    assert {r.quantity for r in rows} == {"position_fit", "velocity_fit", "total"}
    for r in rows:
        assert len(r.samples) == 5
        assert r.std == pytest.approx(0.0, abs=1e-12)
        assert r.mean >= min(r.samples)
    with pytest.raises(ValueError):
        timing_report(d, runs=1)


def test_config_round_trip():
    run = RunConfig(split_seed=4, train_fraction=0.8, learners=("dtr", "svr"),
                    hyperparams=ModelHyperparams(svr_sigma=0.5, mlp_hidden_sizes=(64, 32)),
                    error_threshold_lat=2.5, max_retries=2)
    bal = BallisticConfig(integration_step=0.05)
    assert load_config(dump_config(run, bal)) == (run, bal)
    assert load_config(dump_config()) == (RunConfig(), BallisticConfig())
    assert math.isinf(load_config("")[0].error_threshold_lon)
    with pytest.raises(DataError):
        load_config("nonsense_key=1\n")
    with pytest.raises(DataError):
        load_config("train_fraction=1.5\n")
