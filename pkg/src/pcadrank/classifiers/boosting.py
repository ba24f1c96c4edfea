from __future__ import annotations

import logging
from typing import Any

import numpy as np
from scipy.special import expit

from pcadrank.classifiers.tree import Tree, grow_tree

logger = logging.getLogger(__name__)


def logistic_loss(y: np.ndarray, margin: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


class GradientBoostedTrees:
    """Logistic-loss boosting; score = logistic(prior log-odds + sum of step * tree output)."""

    def __init__(self, n_rounds: int, max_depth: int, shrinkage: float, min_leaf: int, subsample: float):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.shrinkage = shrinkage
        self.min_leaf = min_leaf
        self.subsample = subsample
        self.base_margin = 0.0
        self.trees: list[Tree] = []
        self.steps: list[float] = []
        self.train_loss: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> GradientBoostedTrees:
        rng = np.random.default_rng(seed)
        prior = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        self.base_margin = float(np.log(prior / (1 - prior)))
        margin = np.full(len(X), self.base_margin)
        self.trees, self.steps = [], []
        self.train_loss = [logistic_loss(y, margin)]
        n_sample = max(2 * self.min_leaf, int(round(self.subsample * len(X))))

        for _ in range(self.n_rounds):
            p = expit(margin)
            gradient, hessian = y - p, p * (1 - p)
            rows = np.arange(len(X)) if n_sample >= len(X) else np.sort(rng.choice(len(X), size=n_sample, replace=False))
            g, h = gradient[rows], hessian[rows]
            tree = grow_tree(
                X[rows], g, self.max_depth, self.min_leaf, lambda leaf: float(g[leaf].sum() / max(h[leaf].sum(), 1e-12))
            )
            update = tree.predict(X)
            # backtrack so the training loss never goes up
            step, current = self.shrinkage, self.train_loss[-1]
            while step > 1e-8 and logistic_loss(y, margin + step * update) > current:
                step /= 2
            if logistic_loss(y, margin + step * update) > current:
                step = 0.0
            margin = margin + step * update
            self.trees.append(tree)
            self.steps.append(step)
            self.train_loss.append(logistic_loss(y, margin))
        logger.debug("gbt: %d rounds, training loss %.4f -> %.4f", self.n_rounds, self.train_loss[0], self.train_loss[-1])
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        margin = np.full(len(X), self.base_margin)
        for tree, step in zip(self.trees, self.steps):
            margin += step * tree.predict(X)
        return margin

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_dict(self) -> dict[str, Any]:
        return {"base_margin": self.base_margin, "steps": self.steps, "trees": [t.to_dict() for t in self.trees]}

    def load(self, data: dict[str, Any]) -> GradientBoostedTrees:
        self.base_margin = float(data["base_margin"])
        self.steps = [float(s) for s in data["steps"]]
        self.trees = [Tree.from_dict(t) for t in data["trees"]]
        return self
