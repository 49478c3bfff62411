import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from debrisrisk.metrics import (DegenerateTarget, LengthMismatch, angular_mae, evaluate,
                                feature_importance, mae, mse, r2_score, rfe_select,
                                summarize_errors)

finite = st.integers(-8000, 8000).map(lambda k: k / 8.0)


def test_r2_of_perfect_prediction_is_one():
    rng = np.random.default_rng(0)
    for _ in range(100):
        y = rng.normal(size=int(rng.integers(2, 50)))
        assert r2_score(y, y) == 1.0


def test_r2_of_mean_prediction_is_zero():
    rng = np.random.default_rng(1)
    for _ in range(100):
        y = rng.normal(size=int(rng.integers(2, 50))) * 10
        assert abs(r2_score(y, np.full_like(y, y.mean()))) < 1e-12


def test_mse_nonnegative_and_zero_iff_equal():
    rng = np.random.default_rng(2)
    for _ in range(100):
        y = rng.normal(size=20)
        yhat = rng.normal(size=20)
        assert mse(y, yhat) > 0
        assert mse(y, y) == 0.0


@given(arrays(np.float64, 10, elements=finite), arrays(np.float64, 10, elements=finite))
def test_mse_symmetry_and_sign(a, b):
    assert mse(a, b) == mse(b, a) >= 0
    assert (mse(a, b) == 0) == bool(np.array_equal(a, b))


def test_r2_can_be_negative():
    assert r2_score([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == -3.0


def test_length_mismatch_and_degenerate():
    with pytest.raises(LengthMismatch):
        mse([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        mse([], [])
    with pytest.raises(DegenerateTarget):
        r2_score([2.0, 2.0], [1.0, 3.0])


def test_angular_mae_goes_the_short_way():
    assert angular_mae([179.0], [-179.0]) == pytest.approx(2.0)
    assert mae([179.0], [-179.0]) == 358.0


def test_evaluate_row_and_degenerate_target():
    rep = evaluate("dtr", "vel", 2, [5.0, 5.0, 5.0], [5.0, 5.0, 6.0])
    assert np.isnan(rep.r2)
    assert rep.n_test == 3 and rep.mse == pytest.approx(1 / 3)


def test_summarize_errors_uses_latest_attempt():
    reps = [evaluate("svr", t, 1, [0.0, 1.0], [0.0, 0.0], 0) for t in ("lon", "lat", "vel")]
    reps.append(evaluate("svr", "lat", 1, [0.0, 1.0], [0.0, 1.0], 1))
    (s,) = summarize_errors(reps)
    assert s.mean_abs_error_lon == 0.5 and s.mean_abs_error_lat == 0.0


def test_feature_importance_finds_the_signal():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 6))
    y = 3 * X[:, 4] + 0.1 * rng.normal(size=300)
    imp = feature_importance(X, y)
    assert int(np.argmax(imp)) == 4


def test_rfe_keeps_informative_features():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(400, 6))
    y = 3 * X[:, 1] + 2 * X[:, 3] + 0.05 * rng.normal(size=400)
    res = rfe_select(X, y, k_features=2)
    assert sorted(res.selected) == [1, 3]
    assert sorted(res.elimination_order) == list(range(6))
    assert res.ranking[0] in (1, 3)
    assert set(res.scores) == set(range(1, 7))
