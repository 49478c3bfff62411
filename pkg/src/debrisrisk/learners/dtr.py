"""CART regression tree with pessimistic-error post-pruning."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .. import _backend
from ..core import ModelHyperparams

CONTINUITY_PENALTY = 0.5


@dataclass(frozen=True)
class Leaf:
    value: float
    n_samples: int
    sse: float


@dataclass(frozen=True)
class Split:
    """Rows with ``x[feature] <= threshold`` go left, the rest right.

    ``value``, ``n_samples`` and ``sse`` describe the node's own training
    rows and are what a pruned replacement leaf inherits.
    """

    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    value: float
    n_samples: int
    sse: float


Node = Union[Leaf, Split]


def dtr_fit(X, y, hp: ModelHyperparams | None = None, *, prune: bool | None = None) -> Node:
    """Grow a tree greedily, then prune it on the same rows if requested.

    ``prune`` defaults to ``hp.dtr_prune``; ``hp.dtr_max_depth = None``
    grows until every leaf is pure or its rows are indistinguishable.
    """
    hp = hp or ModelHyperparams()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("dtr_fit needs at least one row")
    tree = _grow(X, y, 0, hp.dtr_max_depth, _backend.kernels.best_split)
    if hp.dtr_prune if prune is None else prune:
        tree = dtr_prune(tree, X, y)
    return tree


def _grow(X, y, depth, max_depth, best_split) -> Node:
    n = y.shape[0]
    value = float(y.mean())
    resid = y - value
    sse = float(resid @ resid)
    if n < 2 or sse == 0.0 or (max_depth is not None and depth >= max_depth):
        return Leaf(value, n, sse)
    j, s, _ = best_split(X, y)
    if j < 0:
        return Leaf(value, n, sse)
    mask = X[:, j] <= s
    return Split(j, s, _grow(X[mask], y[mask], depth + 1, max_depth, best_split),
                 _grow(X[~mask], y[~mask], depth + 1, max_depth, best_split),
                 value, n, sse)


def dtr_predict(tree: Node, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0])
    _predict_into(tree, X, np.arange(X.shape[0]), out)
    return out


def _predict_into(node, X, idx, out):
    while isinstance(node, Split):
        mask = X[idx, node.feature] <= node.threshold
        _predict_into(node.left, X, idx[mask], out)
        idx = idx[~mask]
        node = node.right
    out[idx] = node.value


def leaf_index(tree: Node, X) -> np.ndarray:
    """Position of each row's leaf in depth-first (left first) order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    leaves = list(iter_leaves(tree))
    ids = {id(leaf): k for k, leaf in enumerate(leaves)}
    out = np.empty(X.shape[0], dtype=int)
    for r in range(X.shape[0]):
        node = tree
        while isinstance(node, Split):
            node = node.left if X[r, node.feature] <= node.threshold else node.right
        out[r] = ids[id(node)]
    return out


def iter_leaves(tree: Node):
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Split):
            stack.append(node.right)
            stack.append(node.left)
        else:
            yield node


def node_count(tree: Node) -> int:
    if isinstance(tree, Split):
        return 1 + node_count(tree.left) + node_count(tree.right)
    return 1


def depth(tree: Node) -> int:
    if isinstance(tree, Split):
        return 1 + max(depth(tree.left), depth(tree.right))
    return 0


# ------------------------------------------------------------------- pruning

def pessimistic_error(leaf_errors, leaf_counts):
    """``(ErrorMean, ErrorSTD)`` of a subtree from its leaves' error counts.

    Each leaf adds the 0.5 continuity penalty; the error count is treated
    as binomial over the subtree's rows.
    """
    e = float(np.sum(leaf_errors))
    n = float(np.sum(leaf_counts))
    ratio = (e + CONTINUITY_PENALTY * len(leaf_errors)) / n
    mean = ratio * n
    std = math.sqrt(max(mean * (1.0 - ratio), 0.0))
    return mean, std


def collapsed_error(errors: float, n: float) -> float:
    """ErrorMean of the single leaf that would replace a subtree."""
    return ((errors + CONTINUITY_PENALTY) / n) * n


def should_prune(leaf_errors, leaf_counts, collapsed_errors) -> bool:
    mean, std = pessimistic_error(leaf_errors, leaf_counts)
    return mean + std >= collapsed_error(collapsed_errors, float(np.sum(leaf_counts)))


def error_thresholds(tree: Node, X, y) -> np.ndarray:
    """Per-row error tolerance: the training RMSE of the row's leaf in ``tree``.

    A row counts as an error of whatever leaf currently holds it when its
    absolute residual exceeds this tolerance.
    """
    idx = leaf_index(tree, X)
    leaves = list(iter_leaves(tree))
    resid = np.asarray(y, dtype=float) - np.array([leaves[k].value for k in idx])
    sq = np.zeros(len(leaves))
    cnt = np.zeros(len(leaves))
    np.add.at(sq, idx, resid * resid)
    np.add.at(cnt, idx, 1.0)
    rmse = np.sqrt(sq / np.maximum(cnt, 1.0))
    return rmse[idx]


def dtr_prune(tree: Node, X, y) -> Node:
    """Bottom-up pessimistic-error pruning on the training rows.

    A subtree collapses into a leaf when its penalized error count plus one
    binomial standard deviation is at least the penalized error count of
    the collapsed leaf.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    thr = error_thresholds(tree, X, y)
    pruned, _ = _prune(tree, X, y, thr, np.arange(len(y)))
    return pruned


def _prune(node, X, y, thr, idx):
    """Returns ``(node, [(errors, count) per leaf])``."""
    if isinstance(node, Leaf):
        e = int(np.count_nonzero(np.abs(y[idx] - node.value) > thr[idx]))
        return node, [(e, len(idx))]
    mask = X[idx, node.feature] <= node.threshold
    left, lstats = _prune(node.left, X, y, thr, idx[mask])
    right, rstats = _prune(node.right, X, y, thr, idx[~mask])
    stats = lstats + rstats
    errs = [s[0] for s in stats]
    counts = [s[1] for s in stats]
    yy = y[idx]
    value = float(yy.mean())
    e_leaf = int(np.count_nonzero(np.abs(yy - value) > thr[idx]))
    if should_prune(errs, counts, e_leaf):
        r = yy - value
        return Leaf(value, len(idx), float(r @ r)), [(e_leaf, len(idx))]
    return Split(node.feature, node.threshold, left, right, node.value,
                 node.n_samples, node.sse), stats


# ------------------------------------------------------------- serialization

def tree_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"value": node.value, "n": node.n_samples, "sse": node.sse}
    return {"feature": node.feature, "threshold": node.threshold,
            "value": node.value, "n": node.n_samples, "sse": node.sse,
            "left": tree_to_dict(node.left), "right": tree_to_dict(node.right)}


def tree_from_dict(d: dict) -> Node:
    if "feature" not in d:
        return Leaf(float(d["value"]), int(d["n"]), float(d["sse"]))
    return Split(int(d["feature"]), float(d["threshold"]), tree_from_dict(d["left"]),
                 tree_from_dict(d["right"]), float(d["value"]), int(d["n"]), float(d["sse"]))


def split_gains(tree: Node, n_features: int) -> np.ndarray:
    """Total squared-error reduction credited to each feature's splits."""
    gains = np.zeros(n_features)
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Split):
            gains[node.feature] += node.sse - _sse(node.left) - _sse(node.right)
            stack += [node.left, node.right]
    return gains


def _sse(node) -> float:
    return node.sse
