"""CART trees and the random forest built from them."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from joblib import Parallel, delayed

LEAF = -1


@dataclass
class Tree:
    """Flat node arrays; ``feature == LEAF`` marks a leaf, rows with x < threshold go left."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def _add(self, value: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.value) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature, threshold = np.asarray(self.feature), np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        node = np.zeros(len(X), dtype=int)
        active = np.flatnonzero(feature[node] != LEAF)
        while len(active):
            at = node[active]
            goes_left = X[active, feature[at]] < threshold[at]
            node[active] = np.where(goes_left, left[at], right[at])
            active = active[feature[node[active]] != LEAF]
        return np.asarray(self.value)[node]

    def to_dict(self) -> dict[str, Any]:
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left, "right": self.right, "value": self.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Tree:
        return cls(
            [int(v) for v in data["feature"]],
            [float(v) for v in data["threshold"]],
            [int(v) for v in data["left"]],
            [int(v) for v in data["right"]],
            [float(v) for v in data["value"]],
        )


def best_split(X: np.ndarray, target: np.ndarray, rows: np.ndarray, features: np.ndarray, min_leaf: int) -> tuple[int, float] | None:
    """Split minimising the children's summed squared error.

    For 0/1 targets the squared-error reduction is half the Gini reduction, so the same search
    serves classification and regression trees. Ties keep the earlier feature and the lower threshold.
    """
    n = len(rows)
    t = target[rows]
    total, total_sq = t.sum(), (t * t).sum()
    parent = total_sq - total * total / n
    tolerance = 1e-9 * max(1.0, abs(parent))
    best_gain, best = tolerance, None
    cut = np.arange(min_leaf - 1, n - min_leaf)
    if len(cut) == 0:
        return None
    for j in features:
        x = X[rows, j]
        order = np.argsort(x, kind="stable")
        xs, ts = x[order], t[order]
        candidates = cut[xs[cut] < xs[cut + 1]]
        if len(candidates) == 0:
            continue
        csum, csq = np.cumsum(ts)[candidates], np.cumsum(ts * ts)[candidates]
        n_left = candidates + 1.0
        n_right = n - n_left
        sse = (csq - csum**2 / n_left) + ((total_sq - csq) - (total - csum) ** 2 / n_right)
        gains = parent - sse
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = gains[i]
            best = (int(j), float((xs[candidates[i]] + xs[candidates[i] + 1]) / 2.0))
    return best


def grow_tree(
    X: np.ndarray,
    target: np.ndarray,
    max_depth: int,
    min_leaf: int,
    leaf_value: Callable[[np.ndarray], float],
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Depth-first CART growth; ``leaf_value`` maps the row indices of a leaf to its output."""
    tree = Tree()
    n_features = X.shape[1]
    root = tree._add(leaf_value(np.arange(len(X))))
    stack = [(root, np.arange(len(X)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or len(rows) < 2 * min_leaf or np.ptp(target[rows]) == 0:
            continue
        if max_features is not None and max_features < n_features:
            features = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            features = np.arange(n_features)
        split = best_split(X, target, rows, features, min_leaf)
        if split is None:
            continue
        j, threshold = split
        goes_left = X[rows, j] < threshold
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        tree.feature[node], tree.threshold[node] = j, threshold
        tree.left[node] = tree._add(leaf_value(left_rows))
        tree.right[node] = tree._add(leaf_value(right_rows))
        stack.append((tree.right[node], right_rows, depth + 1))
        stack.append((tree.left[node], left_rows, depth + 1))
    return tree


class DecisionTree:
    def __init__(self, max_depth: int, min_leaf: int):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.tree: Tree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> DecisionTree:
        target = y.astype(float)
        self.tree = grow_tree(X, target, self.max_depth, self.min_leaf, lambda rows: float(target[rows].mean()))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)

    def to_dict(self) -> dict[str, Any]:
        return {"tree": self.tree.to_dict()}

    def load(self, data: dict[str, Any]) -> DecisionTree:
        self.tree = Tree.from_dict(data["tree"])
        return self


def n_split_features(max_features: str, n_features: int) -> int:
    if max_features == "sqrt":
        return max(1, int(round(math.sqrt(n_features))))
    if max_features == "log2":
        return max(1, int(round(math.log2(n_features)))) if n_features > 1 else 1
    return n_features


def _grow_member(X: np.ndarray, y: np.ndarray, seed: np.random.SeedSequence, max_depth: int, min_leaf: int, max_features: int) -> Tree:
    rng = np.random.default_rng(seed)
    sample = rng.integers(len(X), size=len(X))
    target = y[sample].astype(float)
    return grow_tree(X[sample], target, max_depth, min_leaf, lambda rows: float(target[rows].mean()), max_features, rng)


class RandomForest:
    def __init__(self, n_trees: int, max_depth: int, min_leaf: int, max_features: str):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.trees: list[Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> RandomForest:
        # one child seed per tree, so serial and parallel training agree
        seeds = np.random.SeedSequence(seed).spawn(self.n_trees)
        per_split = n_split_features(self.max_features, X.shape[1])
        self.trees = Parallel(n_jobs=n_jobs)(
            delayed(_grow_member)(X, y, s, self.max_depth, self.min_leaf, per_split) for s in seeds
        )
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += tree.predict(X) >= 0.5
        return votes / len(self.trees)

    def to_dict(self) -> dict[str, Any]:
        return {"trees": [t.to_dict() for t in self.trees]}

    def load(self, data: dict[str, Any]) -> RandomForest:
        self.trees = [Tree.from_dict(t) for t in data["trees"]]
        return self
