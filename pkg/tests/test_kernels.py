"""The compiled kernels must agree with the numpy fallback."""
import numpy as np
import pytest

from debrisrisk import _backend, _kernels_py
from debrisrisk.learners.svr import rbf_kernel

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled kernels not built")


@pytest.fixture
def compiled():
    return _backend.get("cython")


def test_backends_report_names(compiled):
    assert compiled.BACKEND == "cython"
    assert _kernels_py.BACKEND == "python"


def test_best_split_identical(compiled):
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        X = rng.normal(size=(n, 6))
        if rng.random() < 0.3:
            X = np.round(X, 1)  # force duplicate values
        y = rng.normal(size=n)
        fa, ta, sa = compiled.best_split(X, y)
        fb, tb, sb = _kernels_py.best_split(X, y)
        assert fa == fb
        assert ta == tb or (np.isnan(ta) and np.isnan(tb))
        assert sa == pytest.approx(sb, rel=1e-12, abs=1e-12) or (np.isnan(sa) and np.isnan(sb))


def test_smo_identical(compiled):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 3))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=80)
    K = rbf_kernel(X, X, 1.3)
    a = compiled.smo_solve(K, y, 0.05, 2.0, 1e-6, 10**6)
    b = _kernels_py.smo_solve(K, y, 0.05, 2.0, 1e-6, 10**6)
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-12)
    assert a[1] == pytest.approx(b[1], abs=1e-12)
    assert a[2:] == b[2:]


def test_integrator_identical(compiled):
    from debrisrisk.datagen import BallisticConfig, drag_factor, entry_state
    from debrisrisk.core import FeatureVector
    from debrisrisk.fragments import default_fragment_set

    cfg = BallisticConfig()
    x = FeatureVector(30.0, 10.0, 70.0, 80e3, 7000.0, -4.0)
    st = entry_state(x, cfg)
    frags = default_fragment_set()
    S = np.tile(st, (len(frags), 1))
    d = np.array([drag_factor(f, cfg) for f in frags])
    args = (cfg.mu, cfg.gravity, cfg.earth_radius, cfg.sea_level_density,
            cfg.atmosphere_scale_height, False, cfg.integration_step, cfg.max_steps)
    fa, sa = compiled.integrate_landing(S, d, *args)
    fb, sb = _kernels_py.integrate_landing(S, d, *args)
    np.testing.assert_array_equal(sa, sb)
    np.testing.assert_allclose(fa, fb, rtol=1e-9, atol=1e-6)


def test_backend_switch_round_trip():
    before = _backend.kernels
    _backend.use("python")
    assert _backend.kernels is _kernels_py
    _backend.use("cython")
    assert _backend.kernels.BACKEND == "cython"
    _backend.kernels = before
    with pytest.raises(ValueError):
        _backend.use("fortran")
