"""Filter-style attribute weighting, per-algorithm ranks and rank aggregation."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, model_validator

from pcadrank.dataio import Table, content_order
from pcadrank.errors import ComputeError, ConfigError
from pcadrank.seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_BINS = 10

# report column order
ALGORITHMS = ("information_gain", "gini_index", "rule", "uncertainty", "relief", "chi_squared")
ALGORITHM_TITLES = {
    "information_gain": "Information Gain",
    "gini_index": "Gini Index",
    "rule": "Rule",
    "uncertainty": "Uncertainty",
    "relief": "Relief",
    "chi_squared": "Chi-Squared",
}


class BinEdges(BaseModel):
    """Interior cut points; a value v falls in bin ``#edges <= v``."""

    model_config = ConfigDict(frozen=True)

    column: str
    edges: tuple[float, ...]

    @model_validator(mode="after")
    def _strictly_increasing(self) -> BinEdges:
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError(f"bin edges of {self.column!r} must be strictly increasing")
        return self

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1

    def assign(self, values: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.edges, dtype=float), np.asarray(values, dtype=float), side="right")


def equal_frequency_bins(values: Sequence[float] | np.ndarray, n_bins: int = DEFAULT_BINS, column: str = "") -> BinEdges:
    """Equal-frequency cut points. Columns with at most ``n_bins`` distinct values get one bin per value."""
    if n_bins < 1:
        raise ConfigError(f"n_bins must be >= 1, got {n_bins}")
    values = np.asarray(values, dtype=float)
    distinct = np.unique(values)
    if len(distinct) <= n_bins:
        edges = (distinct[:-1] + distinct[1:]) / 2.0
    else:
        edges = np.unique(np.quantile(values, np.arange(1, n_bins) / n_bins))
        edges = edges[edges > distinct[0]]
    return BinEdges(column=column, edges=tuple(float(e) for e in edges))


# Contingency-table weighters
def entropy(class_counts: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits."""
    counts = np.asarray(class_counts, dtype=float)
    if (counts < 0).any():
        raise ComputeError("class counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ComputeError("entropy of all-zero counts is undefined")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def gini_impurity(class_counts: Sequence[float] | np.ndarray) -> float:
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ComputeError("gini impurity of all-zero counts is undefined")
    p = counts / total
    return float(1.0 - (p * p).sum())


def _conditional(ct: np.ndarray, impurity: Callable[[np.ndarray], float]) -> float:
    n = ct.sum()
    return sum(row.sum() / n * impurity(row) for row in ct if row.sum() > 0)


def information_gain_from_counts(ct: np.ndarray) -> float:
    ct = np.asarray(ct, dtype=float)
    return max(entropy(ct.sum(axis=0)) - _conditional(ct, entropy), 0.0)


def gini_reduction_from_counts(ct: np.ndarray) -> float:
    ct = np.asarray(ct, dtype=float)
    return max(gini_impurity(ct.sum(axis=0)) - _conditional(ct, gini_impurity), 0.0)


def symmetrical_uncertainty_from_counts(ct: np.ndarray) -> float:
    ct = np.asarray(ct, dtype=float)
    h_attribute = entropy(ct.sum(axis=1))
    if h_attribute == 0.0:
        return 0.0
    h_label = entropy(ct.sum(axis=0))
    return min(2.0 * information_gain_from_counts(ct) / (h_attribute + h_label), 1.0)


def chi_squared_from_counts(ct: np.ndarray) -> float:
    """Raw Pearson statistic; cells with zero expectation contribute nothing."""
    ct = np.asarray(ct, dtype=float)
    n = ct.sum()
    if n <= 0:
        raise ComputeError("chi-squared of an empty contingency table")
    expected = np.outer(ct.sum(axis=1), ct.sum(axis=0)) / n
    nonzero = expected > 0
    return float((((ct - expected) ** 2)[nonzero] / expected[nonzero]).sum())


def rule_accuracy_from_counts(ct: np.ndarray) -> float:
    """Training accuracy of the one-attribute rule predicting each value's majority label."""
    ct = np.asarray(ct, dtype=float)
    n = ct.sum()
    if n <= 0:
        raise ComputeError("rule accuracy of an empty contingency table")
    # a tied value scores the same whichever label it predicts
    return float(ct.max(axis=1).sum() / n)


CONTINGENCY_WEIGHTERS: dict[str, Callable[[np.ndarray], float]] = {
    "information_gain": information_gain_from_counts,
    "gini_index": gini_reduction_from_counts,
    "rule": rule_accuracy_from_counts,
    "uncertainty": symmetrical_uncertainty_from_counts,
    "chi_squared": chi_squared_from_counts,
}


def _check_attribute(table: Table, attribute: str) -> None:
    if attribute == table.schema.label.name:
        raise ConfigError(f"{attribute!r} is the label column")
    if attribute not in table.features:
        raise ConfigError(f"{attribute!r} is not a feature column")
    if table.n_rows == 0:
        raise ComputeError("cannot weigh an empty table")


def discretize(table: Table, attribute: str, bins: BinEdges | None = None) -> np.ndarray:
    """Integer value codes of an attribute; numeric columns are binned (default: equal frequency)."""
    values = table.column(attribute)
    if table.schema.is_numeric(attribute):
        bins = bins or equal_frequency_bins(values, DEFAULT_BINS, attribute)
        return bins.assign(values)
    return np.unique(values, return_inverse=True)[1]


def contingency(table: Table, attribute: str, bins: BinEdges | None = None) -> np.ndarray:
    """Observed attribute values x (negative, positive) counts."""
    _check_attribute(table, attribute)
    _, codes = np.unique(discretize(table, attribute, bins), return_inverse=True)
    ct = np.zeros((codes.max() + 1, 2))
    np.add.at(ct, (codes, table.y), 1.0)
    return ct


def weight_information_gain(table: Table, attribute: str, bins: BinEdges | None = None) -> float:
    return information_gain_from_counts(contingency(table, attribute, bins))


def weight_gini_index(table: Table, attribute: str, bins: BinEdges | None = None) -> float:
    return gini_reduction_from_counts(contingency(table, attribute, bins))


def weight_uncertainty(table: Table, attribute: str, bins: BinEdges | None = None) -> float:
    return symmetrical_uncertainty_from_counts(contingency(table, attribute, bins))


def weight_chi_squared(table: Table, attribute: str, bins: BinEdges | None = None) -> float:
    return chi_squared_from_counts(contingency(table, attribute, bins))


def weight_rule(table: Table, attribute: str, bins: BinEdges | None = None) -> float:
    return rule_accuracy_from_counts(contingency(table, attribute, bins))


# ReliefF
def relief_matrix(table: Table, attributes: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Columns scaled for the Relief diff: numerics min-max normalised, categoricals as codes."""
    columns, categorical = [], []
    for name in attributes:
        values = table.column(name)
        if table.schema.is_numeric(name):
            values = values.astype(float)
            span = values.max() - values.min()
            columns.append((values - values.min()) / span if span > 0 else np.zeros_like(values))
            categorical.append(False)
        else:
            columns.append(np.unique(values, return_inverse=True)[1].astype(float))
            categorical.append(True)
    return np.column_stack(columns), np.array(categorical)


def pairwise_diffs(anchors: np.ndarray, points: np.ndarray, categorical: np.ndarray) -> np.ndarray:
    """Per-attribute diff of every anchor to every point, shape (anchors, points, attributes)."""
    gap = np.abs(anchors[:, None, :] - points[None, :, :])
    return np.where(categorical, (gap > 0).astype(float), gap)


def weight_relief(
    table: Table,
    k_neighbors: int = 10,
    seed: int = 0,
    n_samples: int | None = None,
    attributes: Sequence[str] | None = None,
    chunk_size: int = 64,
) -> dict[str, float]:
    """ReliefF weights in [-1, 1] using k nearest hits and misses per anchor.

    Every row is an anchor unless ``n_samples`` anchors are drawn with ``seed``. Rows are put in content
    order first, so neighbour ties (and sampled anchors) do not depend on the row order of the table.
    """
    if k_neighbors < 1:
        raise ConfigError(f"k_neighbors must be >= 1, got {k_neighbors}")
    attributes = list(attributes or table.features)
    y = table.y
    for cls, name in ((0, table.negative_label), (1, table.positive_label)):
        size = int((y == cls).sum())
        if size < k_neighbors + 1:
            raise ComputeError(f"class {name!r} has {size} rows; relief needs at least {k_neighbors + 1}")

    points, categorical = relief_matrix(table, attributes)
    order = content_order(points, y)
    points, y = points[order], y[order]
    n = table.n_rows
    if n_samples is None:
        anchors = np.arange(n)
    else:
        if not 1 <= n_samples <= n:
            raise ConfigError(f"n_samples must lie in [1, {n}], got {n_samples}")
        anchors = np.sort(np.random.default_rng(seed).choice(n, size=n_samples, replace=False))

    totals = np.zeros(len(attributes))
    for start in range(0, len(anchors), chunk_size):
        batch = anchors[start : start + chunk_size]
        diffs = pairwise_diffs(points[batch], points, categorical)
        distance = diffs.sum(axis=2)
        same = y[batch][:, None] == y[None, :]
        hit_distance = np.where(same, distance, np.inf)
        hit_distance[np.arange(len(batch)), batch] = np.inf
        miss_distance = np.where(same, np.inf, distance)
        hits = np.argsort(hit_distance, axis=1, kind="stable")[:, :k_neighbors]
        misses = np.argsort(miss_distance, axis=1, kind="stable")[:, :k_neighbors]
        rows = np.arange(len(batch))[:, None]
        totals += diffs[rows, misses].sum(axis=(0, 1)) - diffs[rows, hits].sum(axis=(0, 1))

    weights = totals / (len(anchors) * k_neighbors)
    return {name: float(w) for name, w in zip(attributes, weights)}


# Ranking
def rank_attributes(weights: Mapping[str, float]) -> dict[str, int]:
    """Rank 1 for the largest weight; exact ties go to the lexicographically smaller name."""
    if not weights:
        raise ComputeError("cannot rank an empty weight map")
    order = sorted(weights, key=lambda name: (-weights[name], name))
    return {name: position for position, name in enumerate(order, start=1)}


def aggregate_ranks(ranks: Mapping[str, Sequence[int]]) -> tuple[dict[str, float], dict[str, int]]:
    """Mean of each attribute's per-algorithm ranks, and the overall rank by ascending mean."""
    if not ranks:
        raise ComputeError("cannot aggregate an empty rank matrix")
    widths = {len(row) for row in ranks.values()}
    if len(widths) != 1 or 0 in widths:
        raise ComputeError(f"ragged rank matrix: row lengths {sorted(widths)}")
    mean_rank = {name: float(np.mean(row)) for name, row in ranks.items()}
    order = sorted(mean_rank, key=lambda name: (mean_rank[name], name))
    return mean_rank, {name: position for position, name in enumerate(order, start=1)}


class WeightMatrix(BaseModel):
    """Attribute x algorithm weights and ranks, plus mean and overall rank."""

    model_config = ConfigDict(frozen=True)

    attributes: list[str]
    algorithms: list[str]
    weight: dict[str, dict[str, float]]
    rank: dict[str, dict[str, int]]
    mean_rank: dict[str, float]
    overall_rank: dict[str, int]

    @classmethod
    def from_weights(cls, weights: Mapping[str, Mapping[str, float]], attributes: Sequence[str]) -> WeightMatrix:
        """Build from ``{algorithm: {attribute: weight}}``; algorithms keep the mapping's order."""
        algorithms = list(weights)
        per_algorithm = {alg: rank_attributes(weights[alg]) for alg in algorithms}
        rank = {a: {alg: per_algorithm[alg][a] for alg in algorithms} for a in attributes}
        mean_rank, overall_rank = aggregate_ranks({a: list(rank[a].values()) for a in attributes})
        return cls(
            attributes=list(attributes),
            algorithms=algorithms,
            weight={a: {alg: float(weights[alg][a]) for alg in algorithms} for a in attributes},
            rank=rank,
            mean_rank=mean_rank,
            overall_rank=overall_rank,
        )

    def ordered(self) -> list[str]:
        return sorted(self.attributes, key=self.overall_rank.__getitem__)

    def top(self, n: int) -> list[str]:
        return self.ordered()[:n]


def _contingency_weights(table: Table, attribute: str, bins: BinEdges | None) -> dict[str, float]:
    ct = contingency(table, attribute, bins)
    return {alg: fn(ct) for alg, fn in CONTINGENCY_WEIGHTERS.items()}


def weigh_all(
    table: Table,
    n_bins: int = DEFAULT_BINS,
    relief_k: int = 10,
    seed: int = 0,
    exclude: Iterable[str] = (),
    n_jobs: int = 1,
    relief_samples: int | None = None,
) -> WeightMatrix:
    """Run the six weighters on every feature column, rank per algorithm and aggregate."""
    skipped = set(exclude)
    attributes = [a for a in table.features if a not in skipped]
    if not attributes:
        raise ComputeError("no attributes left to weigh")
    if 0 in table.class_counts():
        raise ComputeError("weighting needs both label classes")

    bins = {a: equal_frequency_bins(table.column(a), n_bins, a) for a in attributes if table.schema.is_numeric(a)}
    rows = Parallel(n_jobs=n_jobs)(delayed(_contingency_weights)(table, a, bins.get(a)) for a in attributes)
    relief = weight_relief(table, relief_k, derive_seed(seed, "relief"), relief_samples, attributes)

    weights = {alg: {} for alg in ALGORITHMS}
    for attribute, row in zip(attributes, rows):
        for alg, value in row.items():
            weights[alg][attribute] = value
        weights["relief"][attribute] = relief[attribute]
    matrix = WeightMatrix.from_weights(weights, attributes)
    logger.info("Weighed %d attributes on %d rows; top: %s", len(attributes), table.n_rows, ", ".join(matrix.top(3)))
    return matrix
