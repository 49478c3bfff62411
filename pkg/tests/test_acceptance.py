"""Acceptance suite: one test per criterion, each reporting PASS or FAIL."""
import filecmp
import time

import numpy as np

from conftest import ACCEPTANCE_LINES, run_chain
from debrisrisk import _backend
from debrisrisk.core import ModelHyperparams
from debrisrisk.datagen import generate_dataset
from debrisrisk.fragments import MassDistribution, default_fragment_set
from debrisrisk.learners import fit
from debrisrisk.learners.dtr import Split, dtr_fit, dtr_prune
from debrisrisk.learners.mlp import loss_and_gradient
from debrisrisk.learners.svr import rbf_kernel, svr_fit, svr_predict
from debrisrisk.metrics import mse, r2_score
from debrisrisk.pipeline import RunConfig, run_all
from debrisrisk.risk import DangerLevel, danger_level
from test_dtr import (_rows, brute_force_split, internal_nodes_with_rows, leaf_rmse_per_row,
                      oracle_prune, pep_condition, shape_of)
from test_mlp import _kink_free_net, objective_long
from test_svr import qp_oracle


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_root_split_matches_exhaustive_search():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    hp = ModelHyperparams(dtr_max_depth=None, dtr_prune=False)
    checked = mismatches = 0
    previous = _backend.kernels
    for backend in _backend.available():
        _backend.use(backend)
        for _ in range(60):
            n = int(rng.integers(2, 26))
            X = rng.normal(size=(n, 6))
            if rng.random() < 0.3:
                X = np.round(X, 1)
            y = rng.normal(size=n)
            ref = brute_force_split(X, y)
            if ref is None:
                continue
            root = dtr_fit(X, y, hp)
            checked += 1
            if not (isinstance(root, Split) and (root.feature, root.threshold) == ref[:2]):
                mismatches += 1
    _backend.kernels = previous
    dt = time.perf_counter() - t0
    record(1, checked >= 50 and mismatches == 0 and dt < 5,
           f"{checked} instances, {mismatches} mismatches, {dt:.2f} s")


def test_criterion_02_pruning_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    bad = pruned_sites = kept = 0
    for _ in range(25):
        n = int(rng.integers(40, 160))
        X = rng.normal(size=(n, 6))
        y = np.sin(X[:, 0]) + 0.7 * rng.normal(size=n)
        grown = dtr_fit(X, y, ModelHyperparams(dtr_max_depth=5, dtr_prune=False))
        thr = leaf_rmse_per_row(grown, X, y)
        pruned = dtr_prune(grown, X, y)
        shape, sites = oracle_prune(grown, X, y, thr, list(range(n)))
        bad += shape_of(pruned) != shape
        pruned_sites += len(sites)
        for node, rows in internal_nodes_with_rows(pruned, X, list(range(n))):
            bad += pep_condition(_rows(node, X, rows), y, thr)
            kept += 1
    dt = time.perf_counter() - t0
    record(2, bad == 0 and pruned_sites > 0 and kept > 0 and dt < 5,
           f"25 trees, {pruned_sites} pruned sites, {kept} kept nodes, "
           f"{bad} disagreements, {dt:.2f} s")


def test_criterion_03_svr_matches_qp_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst_w = worst_p = worst_box = 0.0
    for _ in range(8):
        x = np.sort(rng.uniform(0.0, 4.0, 5))[:, None]
        y = rng.normal(0.0, 2.0, 5)
        C = float(rng.choice([0.5, 1.0, 3.0]))
        eps = float(rng.choice([0.1, 0.4, 1.0]))
        hp = ModelHyperparams(svr_c=C, svr_epsilon=eps, svr_sigma=1.0, svr_tol=1e-9)
        model = svr_fit(x, y, hp, standardize=False)
        K = rbf_kernel(x, x, 1.0)
        beta_ref, b_ref = qp_oracle(K, y, eps, C)
        beta = np.zeros(5)
        for sv, w in zip(model.support_vectors, model.dual_weights):
            beta[np.flatnonzero(np.all(x == sv, axis=1))[0]] = w
        Q = np.linspace(-0.5, 4.5, 23)[:, None]
        ref = rbf_kernel(Q, x, 1.0) @ beta_ref + b_ref
        worst_w = max(worst_w, float(np.abs(beta - beta_ref).max()))
        worst_p = max(worst_p, float(np.abs(svr_predict(model, Q) - ref).max()))
        worst_box = max(worst_box, float(np.abs(beta).max() - C))
    dt = time.perf_counter() - t0
    record(3, worst_w < 1e-3 and worst_p < 1e-3 and worst_box <= 1e-3 and dt < 10,
           f"max weight gap {worst_w:.1e}, max prediction gap {worst_p:.1e}, "
           f"box excess {max(worst_box, 0):.1e}, {dt:.2f} s")


def test_criterion_04_mlp_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    h = np.longdouble(1e-6)
    worst = 0.0
    for _ in range(10):
        W, B, X, y = _kink_free_net(rng)
        l2 = float(rng.choice([0.0, 1e-5, 1e-2]))
        _, dW, dB = loss_and_gradient(W, B, X, y, l2)
        WL = [w.astype(np.longdouble) for w in W]
        BL = [b.astype(np.longdouble) for b in B]
        for P, G in zip(WL + BL, dW + dB):
            for idx in np.ndindex(P.shape):
                orig = P[idx]
                P[idx] = orig + h
                up = objective_long(WL, BL, X, y, l2)
                P[idx] = orig - h
                down = objective_long(WL, BL, X, y, l2)
                P[idx] = orig
                num = float((up - down) / (2 * h))
                den = max(abs(G[idx]), abs(num))
                if den > 0:
                    worst = max(worst, abs(G[idx] - num) / den)
    dt = time.perf_counter() - t0
    record(4, worst < 1e-5 and dt < 5, f"10 nets, max relative error {worst:.1e}, {dt:.2f} s")


def test_criterion_05_metric_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    ok = True
    for _ in range(100):
        y = rng.normal(size=int(rng.integers(2, 40))) * 5
        other = y + rng.normal(size=y.size)
        ok &= r2_score(y, y) == 1.0
        ok &= abs(r2_score(y, np.full_like(y, y.mean()))) <= 1e-12
        ok &= mse(y, other) > 0 and mse(y, y) == 0
    dt = time.perf_counter() - t0
    record(5, bool(ok) and dt < 1, f"100 random vectors, {dt:.3f} s")


def test_criterion_06_risk_binning():
    expected = {0.0: DangerLevel.Negligible, 0.04: DangerLevel.Low, 0.16: DangerLevel.Medium,
                0.36: DangerLevel.High, 0.64: DangerLevel.VeryHigh, 1.0: DangerLevel.VeryHigh}
    got = {w: danger_level(w) for w in expected}
    names = [lvl.name for lvl in DangerLevel]
    record(6, got == expected and names == ["Negligible", "Low", "Medium", "High", "VeryHigh"],
           ", ".join(f"{w}->{lvl.name}" for w, lvl in got.items()))


def test_criterion_07_fragment_model():
    masses = [f.mass for f in default_fragment_set()]
    dist = MassDistribution(200.0, scales=(0.1, 0.01, 0.001))
    slope = float(np.polyfit(np.log(dist.unit_masses), np.log(dist.counts()), 1)[0])
    ok = masses == [16.0, 72.7, 65.0, 225.5, 8.0, 20.7, 108.5] and abs(slope + 0.553) < 1e-9
    record(7, ok, f"masses {masses}, log-log slope {slope:.12f}")


def test_criterion_08_qualitative_ranking():
    t0 = time.perf_counter()
    data = generate_dataset(1489, seed=1)
    res = run_all(RunConfig(split_seed=1, train_fraction=0.7), data)
    dt = time.perf_counter() - t0
    r2 = {(c.learner, c.target, c.fragment_id): c.report.r2 for c in res.cells}
    frags = range(1, 8)
    dtr_wins = sum(r2[("dtr", t, f)] > max(r2[("svr", t, f)], r2[("mlp", t, f)])
                   for t in ("lon", "lat") for f in frags)
    lat_over_lon = {lr: sum(r2[(lr, "lat", f)] >= r2[(lr, "lon", f)] for f in frags)
                    for lr in ("svr", "mlp")}
    # soft threshold: at least 6 of 7 fragments for each target / learner
    per_target = {t: sum(r2[("dtr", t, f)] > max(r2[("svr", t, f)], r2[("mlp", t, f)])
                         for f in frags) for t in ("lon", "lat")}
    ok = (min(per_target.values()) >= 6 and min(lat_over_lon.values()) >= 6 and dt < 120)
    record(8, ok, f"DTR best on lon {per_target['lon']}/7, lat {per_target['lat']}/7; "
                  f"lat>=lon for SVR {lat_over_lon['svr']}/7, MLP {lat_over_lon['mlp']}/7; "
                  f"{dt:.1f} s")


def _tree_files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


def test_criterion_09_end_to_end_determinism(tmp_path):
    t0 = time.perf_counter()
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    codes = run_chain(a) + run_chain(b)
    files = _tree_files(a)
    same = files == _tree_files(b) and all(
        filecmp.cmp(a / f, b / f, shallow=False) for f in files)
    dt = time.perf_counter() - t0
    record(9, codes == [0] * 8 and same and dt < 180,
           f"{len(files)} output files compared byte for byte, identical={same}, {dt:.1f} s")


def test_criterion_10_dtr_runtime(full_size_dataset):
    d = full_size_dataset
    hp = ModelHyperparams()
    t0 = time.perf_counter()
    for t in range(3):
        for f in range(7):
            fit("dtr", d.X, d.Y[:, f, t], hp)
    dt = time.perf_counter() - t0
    record(10, dt < 5, f"21 DTR fits on {len(d)} rows in {dt:.2f} s")
