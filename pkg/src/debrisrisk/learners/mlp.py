"""Fully connected ReLU network trained by full-batch gradient descent."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ModelHyperparams
from ._scaling import Standardizer


class DivergenceError(RuntimeError):
    pass


@dataclass(eq=False)
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    alpha: float  # L2 penalty
    feature_scaler: Standardizer
    target_scaler: Standardizer
    n_iter: int = 0
    loss_curve: list[float] = field(default_factory=list)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "alpha": self.alpha,
            "feature_scaler": self.feature_scaler.to_dict(),
            "target_scaler": self.target_scaler.to_dict(),
            "n_iter": self.n_iter,
            "loss_curve": list(self.loss_curve),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        return cls([np.array(w, dtype=float) for w in d["weights"]],
                   [np.array(b, dtype=float) for b in d["biases"]], float(d["alpha"]),
                   Standardizer.from_dict(d["feature_scaler"]),
                   Standardizer.from_dict(d["target_scaler"]), int(d["n_iter"]),
                   [float(v) for v in d.get("loss_curve", [])])

    def __eq__(self, other) -> bool:
        return isinstance(other, MlpModel) and self.to_dict() == other.to_dict()


def init_params(layer_sizes, rng: np.random.Generator):
    """He-normal weights for ReLU layers, unit-gain for the linear output; zero biases."""
    weights, biases = [], []
    last = len(layer_sizes) - 2
    for k, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        gain = 1.0 if k == last else 2.0
        weights.append(rng.normal(0.0, np.sqrt(gain / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X):
    """Returns the output column and the per-layer pre-activations."""
    a = X
    pre = []
    for k, (w, b) in enumerate(zip(weights, biases)):
        h = a @ w + b
        pre.append(h)
        a = np.maximum(h, 0.0) if k < len(weights) - 1 else h
    return a, pre


def loss_and_gradient(weights, biases, X, y, l2: float = 0.0):
    """``xi = 0.5 * sum(e^2) + 0.5 * l2 * sum(||W||^2)`` and its gradient.

    ``e = y - yhat``; ReLU's derivative is taken as 0 at exactly 0.
    Returns ``(xi, dW list, dB list)``.
    """
    X = np.atleast_2d(X)
    out, pre = forward(weights, biases, X)
    e = np.asarray(y, dtype=float).reshape(-1, 1) - out
    xi = 0.5 * float(np.sum(e * e)) + 0.5 * l2 * sum(float(np.sum(w * w)) for w in weights)
    dW = [None] * len(weights)
    dB = [None] * len(weights)
    delta = -e  # d xi / d yhat
    for k in range(len(weights) - 1, -1, -1):
        a_prev = X if k == 0 else np.maximum(pre[k - 1], 0.0)
        dW[k] = a_prev.T @ delta + l2 * weights[k]
        dB[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * (pre[k - 1] > 0.0)
    return xi, dW, dB


def mlp_gradient(m: MlpModel, X, y):
    """Gradient of the training objective on a raw (unscaled) batch."""
    Xs = m.feature_scaler.transform(np.atleast_2d(X))
    ys = m.target_scaler.transform(np.asarray(y, dtype=float).reshape(-1, 1))[:, 0]
    _, dW, dB = loss_and_gradient(m.weights, m.biases, Xs, ys, m.alpha)
    return dW, dB


def mlp_fit(X, y, hp: ModelHyperparams | None = None, seed: int = 0) -> MlpModel:
    """Full-batch training from a seeded He initialization.

    Steps use the row-averaged gradient so the learning rate does not
    depend on the batch size. ``hp.mlp_optimizer`` selects heavy-ball
    momentum (default) or Adam.
    """
    hp = hp or ModelHyperparams()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("mlp_fit needs at least 2 rows")
    fs = Standardizer.fit(X)
    ts = Standardizer.fit(y[:, None])
    Xs = fs.transform(X)
    ys = ts.transform(y[:, None])[:, 0]
    n = Xs.shape[0]
    rng = np.random.default_rng(seed)
    weights, biases = init_params([X.shape[1], *hp.mlp_hidden_sizes, 1], rng)
    params = weights + biases
    vel = [np.zeros_like(p) for p in params]
    sq = [np.zeros_like(p) for p in params]
    lr, mu = hp.mlp_learning_rate, hp.mlp_momentum
    b1, b2, adam_eps = 0.9, 0.999, 1e-8
    curve = []
    it = 0
    # overflow is caught below as a non-finite loss
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, hp.mlp_max_iter + 1):
            xi, dW, dB = loss_and_gradient(weights, biases, Xs, ys, hp.mlp_alpha)
            if not np.isfinite(xi):
                raise DivergenceError(f"loss became {xi} at iteration {it}")
            curve.append(xi / n)
            grads = dW + dB
            for k, (p, g) in enumerate(zip(params, grads)):
                g = g / n
                if hp.mlp_optimizer == "adam":
                    vel[k] = b1 * vel[k] + (1 - b1) * g
                    sq[k] = b2 * sq[k] + (1 - b2) * g * g
                    mhat = vel[k] / (1 - b1 ** it)
                    vhat = sq[k] / (1 - b2 ** it)
                    p -= lr * mhat / (np.sqrt(vhat) + adam_eps)
                else:
                    vel[k] = mu * vel[k] - lr * g
                    p += vel[k]
        final, _, _ = loss_and_gradient(weights, biases, Xs, ys, hp.mlp_alpha)
        if not np.isfinite(final):
            raise DivergenceError("loss became non-finite after the last step")
    return MlpModel(weights, biases, hp.mlp_alpha, fs, ts, it, curve)


def mlp_predict(m: MlpModel, X) -> np.ndarray:
    Xs = m.feature_scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
    out, _ = forward(m.weights, m.biases, Xs)
    return m.target_scaler.inverse(out)[:, 0]
