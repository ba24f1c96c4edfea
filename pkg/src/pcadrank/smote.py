"""Minority oversampling by interpolation (SMOTE, with SMOTE-NC voting for categorical cells)."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from pcadrank.dataio import Table
from pcadrank.errors import ComputeError, ConfigError
from pcadrank.weighting import pairwise_diffs, relief_matrix

logger = logging.getLogger(__name__)


class SmoteConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k_neighbors: int = Field(default=5, ge=1)
    target_ratio: float = Field(default=1.0, gt=0.0, le=1.0)
    seed: int = 0


@dataclass(frozen=True, eq=False)
class SmoteResult:
    """Oversampled table plus, per synthetic row, the row ids of its anchor and chosen neighbour."""

    table: Table
    anchors: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)

    @property
    def n_synthetic(self) -> int:
        return len(self.anchors)


def minority_class(table: Table) -> int:
    """0 or 1; on equal counts the negative class."""
    negatives, positives = table.class_counts()
    return 1 if positives < negatives else 0


def _neighbor_lists(table: Table, minority: np.ndarray, k: int) -> np.ndarray:
    """k nearest minority positions (indices into ``minority``) for every minority row."""
    if len(minority) <= k:
        raise ConfigError(f"minority class has {len(minority)} rows; k={k} needs at least {k + 1}")
    # scaling over the whole table, distance among minority rows only
    points, categorical = relief_matrix(table, table.features)
    points = points[minority]
    distance = np.vstack(
        [pairwise_diffs(points[start : start + 256], points, categorical).sum(axis=2) for start in range(0, len(points), 256)]
    )
    np.fill_diagonal(distance, np.inf)
    return np.argsort(distance, axis=1, kind="stable")[:, :k]


def minority_neighbors(table: Table, row: int, k: int) -> list[int]:
    """Positions of the k minority rows nearest to minority row ``row`` (self excluded, ties by position)."""
    minority = np.flatnonzero(table.y == minority_class(table))
    where = np.flatnonzero(minority == row)
    if len(where) == 0:
        raise ConfigError(f"row {row} is not in the minority class")
    return minority[_neighbor_lists(table, minority, k)[where[0]]].tolist()


def _vote(values: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """Majority category among each row's neighbours; ties keep the row's own value."""
    voted = values.copy()
    for i, row in enumerate(neighbors):
        votes = Counter(values[row])
        top = max(votes.values())
        winners = [value for value, count in votes.items() if count == top]
        if len(winners) == 1:
            voted[i] = winners[0]
    return voted


def oversample(table: Table, config: SmoteConfig) -> SmoteResult:
    """Append synthetic minority rows until minority = ceil(target_ratio * majority)."""
    negatives, positives = table.class_counts()
    if negatives == 0 or positives == 0:
        raise ComputeError("SMOTE needs both classes in the table")
    cls = minority_class(table)
    minority = np.flatnonzero(table.y == cls)
    n_needed = math.ceil(config.target_ratio * max(negatives, positives)) - len(minority)
    if n_needed <= 0:
        return SmoteResult(table, np.empty(0, dtype=int), np.empty(0, dtype=int))

    neighbors = _neighbor_lists(table, minority, config.k_neighbors)
    rng = np.random.default_rng(config.seed)
    # anchors round-robin over a seeded shuffle of the minority rows
    anchors = rng.permutation(len(minority))[np.arange(n_needed) % len(minority)]
    chosen = neighbors[anchors, rng.integers(config.k_neighbors, size=n_needed)]
    gaps = rng.random(n_needed)

    frame = table.frame
    label = table.positive_label if cls == 1 else table.negative_label
    columns: dict[str, np.ndarray] = {}
    for name in table.schema.names:
        values = frame[name].to_numpy()[minority]
        if name == table.schema.label.name:
            columns[name] = np.full(n_needed, label, dtype=object)
        elif table.schema.is_numeric(name):
            start, end = values[anchors].astype(float), values[chosen].astype(float)
            columns[name] = np.clip(start + gaps * (end - start), np.minimum(start, end), np.maximum(start, end))
        else:
            columns[name] = _vote(values, neighbors)[anchors]
    synthetic = pd.DataFrame(columns, index=pd.Index(-np.arange(1, n_needed + 1)))

    ids = frame.index.to_numpy()
    logger.debug("SMOTE added %d %r rows (k=%d)", n_needed, label, config.k_neighbors)
    return SmoteResult(table.append(synthetic), ids[minority[anchors]], ids[minority[chosen]])


def smote(table: Table, config: SmoteConfig) -> Table:
    return oversample(table, config).table
