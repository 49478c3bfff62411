"""Epsilon-insensitive support vector regression with an RBF kernel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..core import ModelHyperparams
from ._scaling import Standardizer


class ConvergenceError(RuntimeError):
    pass


def rbf_kernel(A, B, sigma: float) -> np.ndarray:
    """``exp(-||a - b||^2 / (2 sigma^2))`` for every row pair of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def median_pairwise_distance(X) -> float:
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        return 1.0
    sq = (X * X).sum(1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    iu = np.triu_indices(n, k=1)
    med = float(np.sqrt(np.median(np.maximum(d2[iu], 0.0))))
    return med if med > 0 else 1.0


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray  # standardized feature rows
    dual_weights: np.ndarray
    bias: float  # standardized target units
    sigma: float
    c: float
    epsilon: float  # target units, as configured
    feature_scaler: Standardizer
    target_scaler: Standardizer
    n_iter: int = 0

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_weights": self.dual_weights.tolist(),
            "bias": self.bias,
            "sigma": self.sigma,
            "c": self.c,
            "epsilon": self.epsilon,
            "feature_scaler": self.feature_scaler.to_dict(),
            "target_scaler": self.target_scaler.to_dict(),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        n_feat = len(d["feature_scaler"]["mean"])
        return cls(np.array(d["support_vectors"], dtype=float).reshape(-1, n_feat),
                   np.array(d["dual_weights"], dtype=float), float(d["bias"]),
                   float(d["sigma"]), float(d["c"]), float(d["epsilon"]),
                   Standardizer.from_dict(d["feature_scaler"]),
                   Standardizer.from_dict(d["target_scaler"]), int(d["n_iter"]))

    def __eq__(self, other) -> bool:
        return isinstance(other, SvrModel) and self.to_dict() == other.to_dict()


def svr_fit(X, y, hp: ModelHyperparams | None = None, *, standardize: bool = True,
            max_iter: int | None = None) -> SvrModel:
    """Fit by solving the dual with SMO.

    ``hp.svr_epsilon`` is in target units and is rescaled along with the
    targets. With ``standardize=False`` the raw problem is solved as given.
    """
    hp = hp or ModelHyperparams()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("svr_fit needs at least 2 rows")
    if standardize:
        fs, ts = Standardizer.fit(X), Standardizer.fit(y[:, None])
    else:
        fs, ts = Standardizer.identity(X.shape[1]), Standardizer.identity(1)
    Xs = fs.transform(X)
    ys = ts.transform(y[:, None])[:, 0]
    sigma = hp.svr_sigma if hp.svr_sigma is not None else median_pairwise_distance(Xs)
    eps = hp.svr_epsilon / float(ts.scale[0])
    K = rbf_kernel(Xs, Xs, sigma)
    n = len(ys)
    budget = max_iter if max_iter is not None else max(1_000_000, 200 * n)
    beta, bias, n_iter, converged = _backend.kernels.smo_solve(K, ys, eps, hp.svr_c,
                                                               hp.svr_tol, budget)
    if not converged:
        raise ConvergenceError(f"SMO did not reach KKT tolerance in {n_iter} iterations")
    beta = np.clip(beta, -hp.svr_c, hp.svr_c)
    sv = beta != 0
    return SvrModel(Xs[sv].copy(), beta[sv].copy(), float(bias), float(sigma), hp.svr_c,
                    hp.svr_epsilon, fs, ts, int(n_iter))


def svr_decision(m: SvrModel, Xs) -> np.ndarray:
    """Expansion ``sum_i w_i K(x, x_i) + b`` in standardized units."""
    Xs = np.atleast_2d(Xs)
    if m.support_vectors.shape[0] == 0:
        return np.full(Xs.shape[0], m.bias)
    return rbf_kernel(Xs, m.support_vectors, m.sigma) @ m.dual_weights + m.bias


def svr_predict(m: SvrModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = svr_decision(m, m.feature_scaler.transform(X))
    return m.target_scaler.inverse(f[:, None])[:, 0]
