"""The three regressors plus a small dispatch layer and model-file I/O.

Model files are JSON::

    {"format": "debrisrisk-model", "version": 1, "learner": "svr"|"dtr"|"mlp",
     "hyperparams": {...}, "meta": {...}, "params": {...}}

Floats are written with Python's shortest round-trip repr, so loading a
file reproduces every parameter bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import DataError, ModelHyperparams
from .dtr import Leaf, Node, Split, dtr_fit, dtr_predict, dtr_prune, tree_from_dict, tree_to_dict
from .mlp import DivergenceError, MlpModel, mlp_fit, mlp_gradient, mlp_predict
from ._scaling import Standardizer
from .svr import ConvergenceError, SvrModel, rbf_kernel, svr_fit, svr_predict

LEARNERS = ("svr", "dtr", "mlp")
MODEL_FORMAT = "debrisrisk-model"
MODEL_VERSION = 1


@dataclass(eq=False)
class TrainedModel:
    learner: str
    model: object
    hyperparams: ModelHyperparams
    meta: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return predict(self.learner, self.model, X)

    def to_dict(self) -> dict:
        if self.learner == "dtr":
            params = tree_to_dict(self.model)
        else:
            params = self.model.to_dict()
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "learner": self.learner,
                "hyperparams": self.hyperparams.to_dict(), "meta": dict(self.meta),
                "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DataError(f"not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
        learner = d["learner"]
        if learner == "svr":
            model = SvrModel.from_dict(d["params"])
        elif learner == "dtr":
            model = tree_from_dict(d["params"])
        elif learner == "mlp":
            model = MlpModel.from_dict(d["params"])
        else:
            raise DataError(f"unknown learner {learner!r}")
        return cls(learner, model, ModelHyperparams.from_dict(d["hyperparams"]),
                   dict(d.get("meta", {})))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: bad model file ({exc})") from exc


def fit(learner: str, X, y, hp: ModelHyperparams, seed: int = 0):
    if learner == "svr":
        return svr_fit(X, y, hp)
    if learner == "dtr":
        return dtr_fit(X, y, hp)
    if learner == "mlp":
        return mlp_fit(X, y, hp, seed=seed)
    raise ValueError(f"unknown learner {learner!r}")


def predict(learner: str, model, X) -> np.ndarray:
    if learner == "svr":
        return svr_predict(model, X)
    if learner == "dtr":
        return dtr_predict(model, X)
    if learner == "mlp":
        return mlp_predict(model, X)
    raise ValueError(f"unknown learner {learner!r}")


__all__ = [
    "LEARNERS", "TrainedModel", "fit", "predict", "Standardizer",
    "SvrModel", "svr_fit", "svr_predict", "rbf_kernel", "ConvergenceError",
    "Leaf", "Split", "Node", "dtr_fit", "dtr_predict", "dtr_prune",
    "MlpModel", "mlp_fit", "mlp_predict", "mlp_gradient", "DivergenceError",
]
