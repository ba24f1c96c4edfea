"""Typed tabular cohorts: schema, ingestion with imputation, stratified folds and group filters."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pcadrank.errors import ConfigError, DataError

logger = logging.getLogger(__name__)


# Schema models
class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class ColumnRole(str, Enum):
    FEATURE = "feature"
    LABEL = "label"
    GROUP = "group"


class ColumnSchema(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    kind: ColumnKind
    role: ColumnRole = ColumnRole.FEATURE
    positive_label: str | None = None

    @model_validator(mode="after")
    def _positive_label_iff_label(self) -> ColumnSchema:
        if self.role is ColumnRole.LABEL and not self.positive_label:
            raise ValueError(f"label column {self.name!r} needs a positive_label")
        if self.role is not ColumnRole.LABEL and self.positive_label is not None:
            raise ValueError(f"positive_label is only allowed on the label column, not {self.name!r}")
        return self


class CohortSchema(BaseModel):
    """Ordered column list with exactly one label column and at most one group column."""

    model_config = ConfigDict(frozen=True)

    columns: tuple[ColumnSchema, ...]

    @model_validator(mode="after")
    def _check_roles(self) -> CohortSchema:
        names = [c.name for c in self.columns]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ValueError(f"duplicate column names: {duplicated}")
        labels = [c for c in self.columns if c.role is ColumnRole.LABEL]
        if len(labels) != 1:
            raise ValueError(f"exactly one label column is required, found {len(labels)}")
        if sum(c.role is ColumnRole.GROUP for c in self.columns) > 1:
            raise ValueError("at most one group column is allowed")
        return self

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def label(self) -> ColumnSchema:
        return next(c for c in self.columns if c.role is ColumnRole.LABEL)

    @property
    def group(self) -> ColumnSchema | None:
        return next((c for c in self.columns if c.role is ColumnRole.GROUP), None)

    @property
    def features(self) -> list[str]:
        # the group column doubles as a feature
        return [c.name for c in self.columns if c.role is not ColumnRole.LABEL]

    def column(self, name: str) -> ColumnSchema:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"unknown column {name!r}")

    def is_numeric(self, name: str) -> bool:
        return self.column(name).kind is ColumnKind.NUMERIC

    def restrict(self, features: Iterable[str]) -> CohortSchema:
        """Schema keeping the label plus the given feature columns, in schema order."""
        keep = set(features)
        unknown = keep - set(self.features)
        if unknown:
            raise DataError(f"not feature columns: {sorted(unknown)}")
        return CohortSchema(columns=tuple(c for c in self.columns if c.role is ColumnRole.LABEL or c.name in keep))


def default_schema() -> CohortSchema:
    """The nine-attribute PCAD cohort layout."""
    numeric, categorical = ColumnKind.NUMERIC, ColumnKind.CATEGORICAL
    return CohortSchema(
        columns=(
            ColumnSchema(name="age", kind=numeric),
            ColumnSchema(name="gender", kind=categorical),
            ColumnSchema(name="WC", kind=numeric),
            ColumnSchema(name="BMI", kind=numeric),
            ColumnSchema(name="LDL", kind=numeric),
            ColumnSchema(name="DM", kind=categorical),
            ColumnSchema(name="HBP", kind=categorical),
            ColumnSchema(name="smoking", kind=categorical),
            ColumnSchema(name="ethnicity", kind=categorical, role=ColumnRole.GROUP),
            ColumnSchema(name="pcad", kind=categorical, role=ColumnRole.LABEL, positive_label="yes"),
        )
    )


def load_schema(path: str | Path) -> CohortSchema:
    """Read the JSON schema document ``{"columns": [...]}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"schema file not found: {path}")
    try:
        return CohortSchema.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise DataError(f"invalid schema {path}: {exc}") from exc


def dump_schema(schema: CohortSchema) -> str:
    return schema.model_dump_json(indent=2, exclude_none=True) + "\n"


class IngestionLog(BaseModel):
    source: str
    n_rows: int
    imputed: dict[str, int] = Field(default_factory=dict)

    @property
    def total_imputed(self) -> int:
        return sum(self.imputed.values())


# Table
@dataclass(frozen=True, eq=False)
class Table:
    """Rectangular cohort. The frame index holds the row ids; nothing mutates the frame after construction."""

    schema: CohortSchema
    frame: pd.DataFrame = field(repr=False)
    negative_label: str
    ingestion: IngestionLog | None = None

    @classmethod
    def from_frame(
        cls,
        schema: CohortSchema,
        frame: pd.DataFrame,
        negative_label: str | None = None,
        ingestion: IngestionLog | None = None,
    ) -> Table:
        if list(frame.columns) != schema.names:
            raise DataError(f"frame columns {list(frame.columns)} do not match schema {schema.names}")
        if len(frame) == 0:
            raise DataError("a table needs at least one row")
        if frame.isna().any().any():
            raise DataError("table has missing cells")
        frame = frame.copy()
        for col in schema.columns:
            if col.kind is ColumnKind.NUMERIC and col.role is not ColumnRole.LABEL:
                values = frame[col.name].astype(float)
                if not np.isfinite(values.to_numpy()).all():
                    raise DataError(f"non-finite value in numeric column {col.name!r}")
                frame[col.name] = values
            else:
                frame[col.name] = frame[col.name].astype(str)

        positive = schema.label.positive_label
        observed = sorted(set(frame[schema.label.name]))
        others = [v for v in observed if v != positive]
        if len(observed) > 2 or len(others) > 1:
            raise DataError(f"label non-binary: {observed}")
        if negative_label is None:
            if not others:
                raise DataError(f"label non-binary: only {observed} observed")
            negative_label = others[0]
        elif others and others[0] != negative_label:
            raise DataError(f"label value {others[0]!r} is neither {positive!r} nor {negative_label!r}")
        return cls(schema=schema, frame=frame, negative_label=negative_label, ingestion=ingestion)

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def features(self) -> list[str]:
        return self.schema.features

    @property
    def positive_label(self) -> str:
        return self.schema.label.positive_label

    @property
    def row_ids(self) -> np.ndarray:
        return self.frame.index.to_numpy()

    @property
    def y(self) -> np.ndarray:
        """Label as 0/1, 1 for the positive class."""
        return (self.frame[self.schema.label.name].to_numpy() == self.positive_label).astype(np.int8)

    def class_counts(self) -> tuple[int, int]:
        """(negatives, positives)."""
        n_pos = int(self.y.sum())
        return self.n_rows - n_pos, n_pos

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()

    def take(self, positions: Sequence[int] | np.ndarray) -> Table:
        return Table(self.schema, self.frame.iloc[np.asarray(positions, dtype=int)], self.negative_label)

    def select(self, features: Iterable[str]) -> Table:
        schema = self.schema.restrict(features)
        return Table(schema, self.frame[schema.names], self.negative_label)

    def append(self, rows: pd.DataFrame) -> Table:
        """New table with ``rows`` (same columns, unique new ids) after the existing rows."""
        return Table.from_frame(self.schema, pd.concat([self.frame, rows[self.schema.names]]), self.negative_label)


def _clean(series: pd.Series) -> pd.Series:
    stripped = series.where(series.isna(), series.str.strip())
    return stripped.replace("", np.nan)


def _mode(series: pd.Series) -> str:
    counts = series.dropna().value_counts()
    top = counts.max()
    return min(value for value, count in counts.items() if count == top)


def load_csv(path: str | Path, schema: CohortSchema) -> Table:
    """Read an RFC 4180 CSV with header, impute missing cells (median / mode) and validate."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"data file not found: {path}")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[""], encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"empty file: {path}") from exc

    header = [str(c).strip() for c in raw.columns]
    raw.columns = header
    unknown = sorted(set(header) - set(schema.names))
    if unknown:
        raise DataError(f"unknown column in header: {unknown}")
    missing = [n for n in schema.names if n not in header]
    if missing:
        raise DataError(f"schema columns missing from header: {missing}")
    if raw.empty:
        raise DataError(f"empty file: {path} has no data rows")

    frame = raw[schema.names].copy()
    imputed: dict[str, int] = {}
    for col in schema.columns:
        values = _clean(frame[col.name])
        gaps = values.isna()
        if col.role is ColumnRole.LABEL:
            if gaps.any():
                raise DataError(f"missing label cell at row {int(np.flatnonzero(gaps)[0]) + 1}")
            distinct = sorted(values.unique())
            if len(distinct) != 2:
                raise DataError(f"label non-binary: column {col.name!r} has values {distinct}")
            if col.positive_label not in distinct:
                raise DataError(f"positive label {col.positive_label!r} not observed in {distinct}")
            frame[col.name] = values
            continue
        if gaps.all():
            raise DataError(f"column {col.name!r} has no observed values")
        if col.kind is ColumnKind.NUMERIC:
            numbers = pd.to_numeric(values, errors="coerce")
            bad = values.notna() & (numbers.isna() | ~np.isfinite(numbers.fillna(0.0)))
            if bad.any():
                row = int(np.flatnonzero(bad)[0])
                raise DataError(f"unparseable numeric cell {values.iloc[row]!r} in column {col.name!r} (row {row + 1})")
            frame[col.name] = numbers.fillna(numbers.median())
        else:
            frame[col.name] = values.fillna(_mode(values)) if gaps.any() else values
        if gaps.any():
            imputed[col.name] = int(gaps.sum())
            logger.warning("Imputed %d missing cell(s) in %r", imputed[col.name], col.name)

    ingestion = IngestionLog(source=str(path), n_rows=len(frame), imputed=imputed)
    table = Table.from_frame(schema, frame, ingestion=ingestion)
    logger.info("Loaded %d rows x %d columns from %s", table.n_rows, len(schema.names), path)
    return table


def table_csv(table: Table) -> str:
    return table.frame.to_csv(index=False, lineterminator="\n")


def write_csv(table: Table, path: str | Path) -> None:
    Path(path).write_text(table_csv(table), encoding="utf-8")


def content_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order sorted by content, so results do not depend on how the table was ordered."""
    return np.lexsort((y,) + tuple(X[:, j] for j in reversed(range(X.shape[1]))))


# Folds
@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignment: np.ndarray = field(repr=False)  # row position -> fold id

    def __post_init__(self) -> None:
        if self.assignment.ndim != 1 or ((self.assignment < 0) | (self.assignment >= self.k)).any():
            raise ConfigError(f"fold ids must lie in [0, {self.k})")

    def test_positions(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_positions(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def fold_sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()


def stratified_folds(table: Table, k: int, seed: int) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its rows round-robin into ``k`` folds.

    Negatives continue the deal where the positives stopped, so fold sizes also differ by at most one.
    """
    if not 2 <= k <= table.n_rows:
        raise ConfigError(f"k={k} out of range [2, {table.n_rows}]")
    y = table.y
    for label, size in ((table.negative_label, int((y == 0).sum())), (table.positive_label, int(y.sum()))):
        if size < k:
            raise DataError(f"class {label!r} has {size} rows, fewer than k={k}")

    rng = np.random.default_rng(seed)
    assignment = np.empty(table.n_rows, dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        members = rng.permutation(np.flatnonzero(y == cls))
        assignment[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldPlan(k=k, assignment=assignment)


def split(table: Table, plan: FoldPlan, fold: int) -> tuple[Table, Table]:
    if len(plan.assignment) != table.n_rows:
        raise ConfigError(f"fold plan covers {len(plan.assignment)} rows, table has {table.n_rows}")
    if not 0 <= fold < plan.k:
        raise ConfigError(f"fold index {fold} out of range [0, {plan.k})")
    return table.take(plan.train_positions(fold)), table.take(plan.test_positions(fold))


def filter_by_group(table: Table, group_value: str) -> Table:
    group = table.schema.group
    if group is None:
        raise DataError("table has no group column")
    mask = table.column(group.name) == group_value
    if not mask.any():
        raise DataError(f"group value {group_value!r} not present in column {group.name!r}")
    return table.take(np.flatnonzero(mask))


def group_values(table: Table) -> list[str]:
    """Observed group values, most frequent first (ties by name)."""
    group = table.schema.group
    if group is None:
        raise DataError("table has no group column")
    counts = pd.Series(table.column(group.name)).value_counts()
    return sorted(counts.index, key=lambda v: (-counts[v], v))
