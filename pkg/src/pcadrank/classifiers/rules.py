"""Sequential covering: an ordered list of conjunctive rules over equal-frequency cut points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from pcadrank.weighting import equal_frequency_bins


@dataclass(frozen=True)
class Condition:
    column: int
    op: str  # "<" or ">="
    threshold: float

    def holds(self, X: np.ndarray) -> np.ndarray:
        x = X[:, self.column]
        return x < self.threshold if self.op == "<" else x >= self.threshold


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    target: int
    score: float  # positive fraction among the covered training rows
    coverage: int

    def covers(self, X: np.ndarray) -> np.ndarray:
        mask = np.ones(len(X), dtype=bool)
        for condition in self.conditions:
            mask &= condition.holds(X)
        return mask


def candidate_conditions(X: np.ndarray, n_bins: int) -> list[Condition]:
    conditions = []
    for j in range(X.shape[1]):
        for edge in equal_frequency_bins(X[:, j], n_bins).edges:
            conditions.append(Condition(j, "<", edge))
            conditions.append(Condition(j, ">=", edge))
    return conditions


class RuleInduction:
    def __init__(self, n_bins: int, min_coverage: int, max_rules: int):
        self.n_bins = n_bins
        self.min_coverage = min_coverage
        self.max_rules = max_rules
        self.rules: list[Rule] = []
        self.default = 0.5

    def _grow(self, hold: np.ndarray, y: np.ndarray, target: int) -> tuple[list[int], np.ndarray, float]:
        """Greedily add the condition with the best precision for ``target`` (then coverage, then order)."""
        hits = (y == target).astype(float)
        covered = np.ones(len(y), dtype=bool)
        precision = hits.mean()
        chosen: list[int] = []
        while precision < 1.0:
            coverage = covered.astype(float) @ hold
            correct = (covered * hits) @ hold
            usable = coverage >= self.min_coverage
            usable[chosen] = False
            if not usable.any():
                break
            scores = np.where(usable, correct / np.maximum(coverage, 1.0), -1.0)
            best = max(np.flatnonzero(usable), key=lambda c: (scores[c], coverage[c], -c))
            if scores[best] <= precision:
                break
            chosen.append(int(best))
            covered &= hold[:, best].astype(bool)
            precision = scores[best]
        return chosen, covered, precision

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> RuleInduction:
        self.default = float(y.mean())
        candidates = candidate_conditions(X, self.n_bins)
        self.rules = []
        if not candidates:
            return self
        hold = np.column_stack([c.holds(X) for c in candidates]).astype(float)
        remaining = np.arange(len(y))
        while len(self.rules) < self.max_rules and len(remaining) >= self.min_coverage:
            y_left = y[remaining]
            best = None
            for target in (1, 0):
                base = float((y_left == target).mean())
                chosen, covered, precision = self._grow(hold[remaining], y_left, target)
                lift = precision - base
                if chosen and lift > 0 and (best is None or lift > best[0]):
                    best = (lift, target, chosen, covered)
            if best is None:
                break
            _, target, chosen, covered = best
            self.rules.append(
                Rule(
                    conditions=tuple(candidates[c] for c in chosen),
                    target=target,
                    score=float(y_left[covered].mean()),
                    coverage=int(covered.sum()),
                )
            )
            remaining = remaining[~covered]
        # the default rule scores whatever no rule covers
        if len(remaining):
            self.default = float(y[remaining].mean())
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        scores = np.full(len(X), self.default)
        undecided = np.ones(len(X), dtype=bool)
        for rule in self.rules:
            hit = undecided & rule.covers(X)
            scores[hit] = rule.score
            undecided &= ~hit
        return scores

    def to_dict(self) -> dict[str, Any]:
        return {
            "default": self.default,
            "rules": [
                {
                    "conditions": [[c.column, c.op, c.threshold] for c in rule.conditions],
                    "target": rule.target,
                    "score": rule.score,
                    "coverage": rule.coverage,
                }
                for rule in self.rules
            ],
        }

    def load(self, data: dict[str, Any]) -> RuleInduction:
        self.default = float(data["default"])
        self.rules = [
            Rule(
                conditions=tuple(Condition(int(j), op, float(t)) for j, op, t in r["conditions"]),
                target=int(r["target"]),
                score=float(r["score"]),
                coverage=int(r["coverage"]),
            )
            for r in data["rules"]
        ]
        return self
