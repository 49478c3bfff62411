"""Regression metrics, evaluation rows, and recursive feature elimination."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ModelHyperparams


class LengthMismatch(ValueError):
    pass


class DegenerateTarget(ValueError):
    pass


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise LengthMismatch(f"lengths differ: {y.size} vs {yhat.size}")
    if y.size == 0:
        raise LengthMismatch("empty input")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    r = y - yhat
    return float(r @ r) / y.size


def r2_score(y, yhat) -> float:
    """``1 - SS_res / SS_tot``; negative when worse than predicting the mean."""
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise LengthMismatch("r2_score needs at least 2 values")
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        raise DegenerateTarget("all targets identical")
    r = y - yhat
    return 1.0 - float(r @ r) / ss_tot


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def angular_mae(y, yhat) -> float:
    """Mean absolute longitude error, measured the short way round."""
    y, yhat = _pair(y, yhat)
    d = np.mod(y - yhat + 180.0, 360.0) - 180.0
    return float(np.mean(np.abs(d)))


@dataclass(frozen=True)
class EvalReport:
    """Test-set scores for one (learner, target, fragment) model."""

    learner: str
    target: str
    fragment_id: int
    r2: float
    mse: float
    mae: float
    n_test: int
    attempt: int = 0

    def row(self) -> dict:
        return asdict(self)


EVAL_COLUMNS = ("learner", "target", "fragment_id", "attempt", "r2", "mse", "mae", "n_test")


def evaluate(learner: str, target: str, fragment_id: int, y, yhat, attempt: int = 0) -> EvalReport:
    try:
        r2 = r2_score(y, yhat)
    except DegenerateTarget:
        r2 = float("nan")
    err = angular_mae(y, yhat) if target == "lon" else mae(y, yhat)
    return EvalReport(learner, target, fragment_id, r2, mse(y, yhat), err, len(y), attempt)


@dataclass(frozen=True)
class ErrorSummary:
    """Mean absolute landing errors of one learner on one fragment."""

    learner: str
    fragment_id: int
    mean_abs_error_lon: float
    mean_abs_error_lat: float
    mean_abs_error_vel: float
    n_test: int


def summarize_errors(reports) -> list[ErrorSummary]:
    """Fold per-target reports (last attempt wins) into per-fragment rows."""
    latest = {}
    for r in reports:
        key = (r.learner, r.fragment_id, r.target)
        if key not in latest or r.attempt >= latest[key].attempt:
            latest[key] = r
    out = []
    for learner, frag in sorted({(k[0], k[1]) for k in latest}):
        get = lambda t: latest[(learner, frag, t)].mae if (learner, frag, t) in latest else float("nan")
        n = max(latest[k].n_test for k in latest if k[:2] == (learner, frag))
        out.append(ErrorSummary(learner, frag, get("lon"), get("lat"), get("vel"), n))
    return out


# ------------------------------------------------------------------------ RFE

@dataclass(frozen=True)
class RfeResult:
    selected: tuple[int, ...]
    # features in the order they were dropped; the final survivor is last
    elimination_order: tuple[int, ...]
    # held-out R^2 of a tree on each surviving subset, keyed by subset size
    scores: dict

    @property
    def ranking(self) -> tuple[int, ...]:
        """Features from most to least important."""
        return tuple(reversed(self.elimination_order))


def feature_importance(X, y, hp: ModelHyperparams | None = None) -> np.ndarray:
    """Squared-error reduction attributed to each feature by a fitted tree."""
    from .learners.dtr import dtr_fit, split_gains

    X = np.atleast_2d(np.asarray(X, dtype=float))
    tree = dtr_fit(X, y, hp or ModelHyperparams(), prune=False)
    return split_gains(tree, X.shape[1])


def rfe_select(X, y, k_features: int, hp: ModelHyperparams | None = None,
               holdout_fraction: float = 0.3, seed: int = 0) -> RfeResult:
    """Repeatedly fit a tree and drop the least important feature.

    Ties drop the lowest feature index first. Elimination runs down to a
    single feature so the full order is always reported; ``selected`` is
    the last ``k_features`` survivors.
    """
    from .learners.dtr import dtr_fit, dtr_predict

    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    if not 1 <= k_features <= d:
        raise ValueError(f"k_features must be in 1..{d}, got {k_features}")
    hp = hp or ModelHyperparams()
    n = len(y)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round((1.0 - holdout_fraction) * n))
    tr, te = perm[:n_train], perm[n_train:]

    remaining = list(range(d))
    order = []
    scores = {}
    selected = None
    while True:
        cols = np.array(remaining)
        if len(te) >= 2:
            tree = dtr_fit(X[np.ix_(tr, cols)], y[tr], hp, prune=False)
            try:
                scores[len(remaining)] = r2_score(y[te], dtr_predict(tree, X[np.ix_(te, cols)]))
            except DegenerateTarget:
                scores[len(remaining)] = float("nan")
        if len(remaining) == k_features:
            selected = tuple(remaining)
        if len(remaining) == 1:
            order.append(remaining[0])
            break
        imp = feature_importance(X[:, cols], y, hp)
        drop = remaining[int(np.argmin(imp))]  # argmin returns the first minimum
        order.append(drop)
        remaining.remove(drop)
    return RfeResult(selected, tuple(order), scores)
