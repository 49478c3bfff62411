"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from debrisrisk import _backend
from debrisrisk.core import FeatureVector, ModelHyperparams
from debrisrisk.datagen import BallisticConfig, drag_factor, entry_state
from debrisrisk.fragments import default_fragment_set
from debrisrisk.learners.dtr import dtr_fit
from debrisrisk.learners.svr import rbf_kernel


def cases():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(1042, 6))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=1042)
    hp = ModelHyperparams()

    Xs = rng.normal(size=(400, 6))
    K = rbf_kernel(Xs, Xs, 2.0)
    ys = np.sin(Xs[:, 0]) + 0.1 * rng.normal(size=400)

    cfg = BallisticConfig()
    frags = default_fragment_set()
    st = entry_state(FeatureVector(30.0, 10.0, 70.0, 80e3, 7000.0, -4.0), cfg)
    S = np.tile(st, (20 * len(frags), 1))
    d = np.tile([drag_factor(f, cfg) for f in frags], 20)
    fly = (cfg.mu, cfg.gravity, cfg.earth_radius, cfg.sea_level_density,
           cfg.atmosphere_scale_height, False, cfg.integration_step, cfg.max_steps)

    return {
        "best_split (1042x6)": lambda: _backend.kernels.best_split(X, y),
        "dtr_fit depth 5 (1042 rows)": lambda: dtr_fit(X, y, hp),
        "smo_solve (400 points)": lambda: _backend.kernels.smo_solve(K, ys, 0.05, 6.13, 1e-4,
                                                                   10**6),
        "integrate_landing (140 bodies)": lambda: _backend.kernels.integrate_landing(S, d, *fly),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = _backend.available()
    timings = {}
    for name in backends:
        _backend.use(name)
        for case, fn in cases().items():
            fn()  # warm up
            timings[(case, name)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    width = max(len(c) for c, _ in timings)
    print(f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
          + ("     speedup" if len(backends) > 1 else ""))
    for case in dict.fromkeys(c for c, _ in timings):
        row = [timings[(case, b)] for b in backends]
        line = f"{case:<{width}}  " + "  ".join(f"{t * 1e3:>8.1f}ms" for t in row)
        if len(row) > 1:
            line += f"  {row[1] / row[0]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
