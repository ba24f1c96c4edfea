"""Cross-validated metrics, the with/without-feature ablation and the per-group analyses."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy.stats import rankdata

from pcadrank.classifiers import ClassifierKind, ClassifierSpec, fit, predict_table
from pcadrank.dataio import FoldPlan, Table, filter_by_group, group_values, split, stratified_folds
from pcadrank.errors import ComputeError, ConfigError, DataError
from pcadrank.seeding import derive_seed
from pcadrank.smote import SmoteConfig, SmoteResult, oversample
from pcadrank.weighting import weigh_all

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "auc")
THRESHOLD = 0.5
MIN_GROUP_ROWS = 20


class Metrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    accuracy: float = Field(ge=0.0, le=1.0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    auc: float = Field(ge=0.0, le=1.0)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> Metrics:
        return cls(**{name: float(np.clip(v, 0.0, 1.0)) for name, v in zip(METRICS, values)})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in METRICS])


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


def confusion(scores: Sequence[float], labels: Sequence[int], threshold: float = THRESHOLD) -> Confusion:
    scores, labels = np.asarray(scores, dtype=float), np.asarray(labels).astype(bool)
    if len(scores) != len(labels):
        raise ConfigError(f"{len(scores)} scores but {len(labels)} labels")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold {threshold} outside [0, 1]")
    predicted = scores >= threshold
    return Confusion(
        tp=int((predicted & labels).sum()),
        fp=int((predicted & ~labels).sum()),
        tn=int((~predicted & ~labels).sum()),
        fn=int((~predicted & labels).sum()),
    )


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: share of positive/negative pairs ordered correctly, ties counting one half."""
    scores, labels = np.asarray(scores, dtype=float), np.asarray(labels).astype(bool)
    if len(scores) != len(labels):
        raise ConfigError(f"{len(scores)} scores but {len(labels)} labels")
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ComputeError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def score_metrics(scores: Sequence[float], labels: Sequence[int], threshold: float = THRESHOLD) -> Metrics:
    c = confusion(scores, labels, threshold)
    n = c.tp + c.fp + c.tn + c.fn
    return Metrics(
        accuracy=(c.tp + c.tn) / n,
        precision=c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0,
        recall=c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0,
        auc=auc(scores, labels),
    )


class ClassifierSummary(BaseModel):
    mean: Metrics
    std: Metrics
    per_fold: list[Metrics] = Field(default_factory=list)

    @classmethod
    def from_folds(cls, per_fold: Sequence[Metrics]) -> ClassifierSummary:
        values = np.array([m.as_array() for m in per_fold])
        std = values.std(axis=0, ddof=1) if len(values) > 1 else np.zeros(len(METRICS))
        return cls(mean=Metrics.from_array(values.mean(axis=0)), std=Metrics.from_array(std), per_fold=list(per_fold))


class EvalReport(BaseModel):
    """Per-classifier mean and std over folds plus the "Average" column and the run settings."""

    results: dict[ClassifierKind, ClassifierSummary]
    average: Metrics
    average_std: Metrics
    seed: int = 0
    folds: int = 0
    smote: SmoteConfig | None = None
    features: list[str] = Field(default_factory=list)

    @classmethod
    def from_summaries(cls, results: Mapping[ClassifierKind, ClassifierSummary], **settings) -> EvalReport:
        if not results:
            raise ComputeError("an evaluation report needs at least one classifier")
        ordered = {kind: results[kind] for kind in ClassifierKind if kind in results}
        means = np.array([s.mean.as_array() for s in ordered.values()])
        stds = np.array([s.std.as_array() for s in ordered.values()])
        return cls(
            results=ordered,
            average=Metrics.from_array(means.mean(axis=0)),
            average_std=Metrics.from_array(stds.mean(axis=0)),
            **settings,
        )

    @classmethod
    def from_means(
        cls,
        means: Mapping[ClassifierKind, Metrics],
        stds: Mapping[ClassifierKind, Metrics] | None = None,
        **settings,
    ) -> EvalReport:
        """Report from per-classifier means alone, e.g. to replay a reference table."""
        zero = Metrics(accuracy=0.0, precision=0.0, recall=0.0, auc=0.0)
        stds = stds or {}
        summaries = {kind: ClassifierSummary(mean=m, std=stds.get(kind, zero)) for kind, m in means.items()}
        return cls.from_summaries(summaries, **settings)


class AblationReport(BaseModel):
    feature: str
    with_feature: EvalReport
    without_feature: EvalReport

    @computed_field
    @property
    def delta(self) -> dict[str, float]:
        """Average-column difference, with minus without."""
        return {
            name: getattr(self.with_feature.average, name) - getattr(self.without_feature.average, name)
            for name in METRICS
        }


# Cross-validation
def _check_leakage(result: SmoteResult, train: Table, test: Table) -> None:
    used = np.concatenate([result.anchors, result.neighbors])
    if not np.isin(used, train.row_ids).all() or np.isin(used, test.row_ids).any():
        raise ComputeError("oversampling used rows outside the training split")


def evaluate_fold(
    table: Table, spec: ClassifierSpec, plan: FoldPlan, fold: int, smote_cfg: SmoteConfig | None
) -> Metrics:
    train, test = split(table, plan, fold)
    if test.n_rows < 2:
        raise ComputeError(f"fold {fold} has {test.n_rows} test row(s); at least 2 are needed")
    if smote_cfg is not None:
        result = oversample(train, smote_cfg.model_copy(update={"seed": derive_seed(smote_cfg.seed, "smote", fold)}))
        _check_leakage(result, train, test)
        train = result.table
    model = fit(spec.with_seed(derive_seed(spec.seed, f"fit:{spec.kind.value}", fold)), train)
    metrics = score_metrics(predict_table(model, test), test.y)
    logger.debug("%s fold %d: %s", spec.kind.value, fold, metrics)
    return metrics


def _mask(table: Table, feature_mask: Iterable[str] | None) -> list[str]:
    if feature_mask is None:
        return table.features
    mask = set(feature_mask)
    if not mask:
        raise ConfigError("feature mask is empty")
    unknown = mask - set(table.features)
    if unknown:
        raise ConfigError(f"feature mask names non-feature columns {sorted(unknown)}")
    return [name for name in table.features if name in mask]


def cross_validate(
    table: Table,
    spec: ClassifierSpec,
    plan: FoldPlan,
    smote_cfg: SmoteConfig | None = None,
    feature_mask: Iterable[str] | None = None,
    n_jobs: int = 1,
) -> ClassifierSummary:
    """Fit on each training split (oversampled when ``smote_cfg`` is given) and score the untouched test split.

    ``feature_mask`` lists the features to INCLUDE; None keeps them all.
    """
    masked = table.select(_mask(table, feature_mask))
    per_fold = Parallel(n_jobs=n_jobs)(
        delayed(evaluate_fold)(masked, spec, plan, fold, smote_cfg) for fold in range(plan.k)
    )
    return ClassifierSummary.from_folds(per_fold)


def evaluate(
    table: Table,
    specs: Sequence[ClassifierSpec],
    plan: FoldPlan,
    smote_cfg: SmoteConfig | None = None,
    feature_mask: Iterable[str] | None = None,
    seed: int = 0,
    n_jobs: int = 1,
) -> EvalReport:
    features = _mask(table, feature_mask)
    results = {}
    for spec in specs:
        results[spec.kind] = cross_validate(table, spec, plan, smote_cfg, features, n_jobs)
        mean = results[spec.kind].mean
        logger.info("%-16s mean AUC %.3f  accuracy %.3f", spec.kind.value, mean.auc, mean.accuracy)
    return EvalReport.from_summaries(results, seed=seed, folds=plan.k, smote=smote_cfg, features=features)


def ablation(
    table: Table,
    feature: str,
    specs: Sequence[ClassifierSpec],
    plan: FoldPlan,
    smote_cfg: SmoteConfig | None = None,
    seed: int = 0,
    n_jobs: int = 1,
) -> AblationReport:
    """Same folds and seeds, once with every feature and once without ``feature``."""
    if feature not in table.features:
        raise ConfigError(f"unknown feature {feature!r}; features are {table.features}")
    others = [name for name in table.features if name != feature]
    logger.info("Ablation of %r: evaluating %d classifier(s) over %d folds", feature, len(specs), plan.k)
    without = evaluate(table, specs, plan, smote_cfg, others, seed, n_jobs)
    with_ = evaluate(table, specs, plan, smote_cfg, table.features, seed, n_jobs)
    report = AblationReport(feature=feature, with_feature=with_, without_feature=without)
    logger.info("Including %r changes average AUC by %+.3f", feature, report.delta["auc"])
    return report


# Per-group analyses
class GroupRankings(BaseModel):
    top: dict[str, list[str]]
    sizes: dict[str, int]
    skipped: dict[str, str] = Field(default_factory=dict)
    overall: list[str] = Field(default_factory=list)


def _group_column(table: Table) -> str:
    if table.schema.group is None:
        raise DataError("table has no group column")
    return table.schema.group.name


def per_group_rankings(
    table: Table,
    top_n: int = 5,
    n_bins: int = 10,
    relief_k: int = 10,
    seed: int = 0,
    min_rows: int = MIN_GROUP_ROWS,
    n_jobs: int = 1,
) -> GroupRankings:
    """Top attributes by overall rank within each group; the group column is left out of its own ranking."""
    group = _group_column(table)
    top, sizes, skipped = {}, {}, {}
    for value in group_values(table):
        subset = filter_by_group(table, value)
        sizes[value] = subset.n_rows
        if subset.n_rows < min_rows:
            skipped[value] = f"{subset.n_rows} rows < {min_rows}"
            logger.warning("Skipping group %r: %s", value, skipped[value])
            continue
        try:
            matrix = weigh_all(subset, n_bins, relief_k, derive_seed(seed, f"weigh:{value}"), exclude=[group], n_jobs=n_jobs)
        except ComputeError as exc:
            skipped[value] = str(exc)
            logger.warning("Skipping group %r: %s", value, exc)
            continue
        top[value] = matrix.top(top_n)
    overall = weigh_all(table, n_bins, relief_k, seed, n_jobs=n_jobs).top(top_n)
    return GroupRankings(top=top, sizes=sizes, skipped=skipped, overall=overall)


class GroupWinner(BaseModel):
    kind: ClassifierKind
    metrics: Metrics
    n_rows: int


class GroupWinners(BaseModel):
    winners: dict[str, GroupWinner]
    sizes: dict[str, int]
    skipped: dict[str, str] = Field(default_factory=dict)
    overall: GroupWinner | None = None


def _winner(table: Table, specs: Sequence[ClassifierSpec], k: int, seed: int, smote_cfg: SmoteConfig | None, n_jobs: int) -> GroupWinner:
    plan = stratified_folds(table, k, seed)
    results = {spec.kind: cross_validate(table, spec, plan, smote_cfg, n_jobs=n_jobs).mean for spec in specs}
    # accuracy, then AUC, then kind name
    kind = min(results, key=lambda kd: (-results[kd].accuracy, -results[kd].auc, kd.value))
    return GroupWinner(kind=kind, metrics=results[kind], n_rows=table.n_rows)


def best_classifier_per_group(
    table: Table,
    specs: Sequence[ClassifierSpec],
    k: int = 10,
    seed: int = 0,
    smote_cfg: SmoteConfig | None = None,
    n_jobs: int = 1,
) -> GroupWinners:
    """Winning classifier (by mean accuracy) per group, with fresh stratified folds inside each group."""
    _group_column(table)
    floor = max(MIN_GROUP_ROWS, 2 * k)
    winners, sizes, skipped = {}, {}, {}
    for value in group_values(table):
        subset = filter_by_group(table, value)
        sizes[value] = subset.n_rows
        smallest = min(subset.class_counts())
        if subset.n_rows < floor or smallest < k:
            skipped[value] = f"{subset.n_rows} rows (smallest class {smallest}); needs {floor} rows and {k} per class"
            logger.warning("Skipping group %r: %s", value, skipped[value])
            continue
        try:
            winners[value] = _winner(subset, specs, k, seed, smote_cfg, n_jobs)
        except (ComputeError, ConfigError) as exc:
            skipped[value] = str(exc)
            logger.warning("Skipping group %r: %s", value, exc)
            continue
        logger.info("Group %r: best classifier %s", value, winners[value].kind.value)
    overall = _winner(table, specs, k, seed, smote_cfg, n_jobs)
    return GroupWinners(winners=winners, sizes=sizes, skipped=skipped, overall=overall)
