"""Synthetic cohorts with a known logistic label model, for testing rankings and ablations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.special import expit

from pcadrank.dataio import ColumnKind, ColumnRole, ColumnSchema, CohortSchema, Table
from pcadrank.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_PATH = Path(__file__).resolve().parent / "config" / "synth.yaml"
PRESETS = ("ipad", "observed", "null", "planted", "separable", "mechanism")


@lru_cache(maxsize=1)
def synth_config() -> dict[str, Any]:
    with open(CONFIG_PATH, "r") as f:
        return yaml.safe_load(f)


class NumericFeature(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["numeric"] = "numeric"
    mean: float
    sd: float = Field(gt=0.0)


class CategoricalFeature(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["categorical"] = "categorical"
    values: dict[str, float]
    risk: str  # coded +1 in the linear score

    @model_validator(mode="after")
    def _check_values(self) -> CategoricalFeature:
        if len(self.values) < 2:
            raise ValueError("a categorical feature needs at least two values")
        if any(p < 0 for p in self.values.values()) or abs(sum(self.values.values()) - 1.0) > 1e-9:
            raise ValueError(f"value probabilities must be non-negative and sum to 1, got {self.values}")
        if self.risk not in self.values:
            raise ValueError(f"risk value {self.risk!r} is not one of {list(self.values)}")
        return self


FeatureDef = Annotated[Union[NumericFeature, CategoricalFeature], Field(discriminator="kind")]


class Interaction(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: str
    b: str
    coef: float


class GroupMechanism(BaseModel):
    """Per-group departures from the shared label model."""

    model_config = ConfigDict(frozen=True)

    offset: float = 0.0
    coefficients: dict[str, float] = Field(default_factory=dict)
    interactions: tuple[Interaction, ...] = ()


class SynthSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_rows: int = Field(default=1000, ge=100)
    seed: int = 0
    prevalence: float = Field(default=0.6407, gt=0.0, lt=1.0)
    noise_sd: float = Field(default=0.0, ge=0.0)
    label: str = "pcad"
    positive_label: str = "yes"
    negative_label: str = "no"
    group: str = "ethnicity"
    group_distribution: dict[str, float]
    features: dict[str, FeatureDef]
    coefficients: dict[str, float] = Field(default_factory=dict)
    mechanisms: dict[str, GroupMechanism] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_spec(self) -> SynthSpec:
        probabilities = list(self.group_distribution.values())
        if not probabilities or any(p < 0 for p in probabilities) or abs(sum(probabilities) - 1.0) > 1e-9:
            raise ValueError(f"group probabilities must be non-negative and sum to 1, got {self.group_distribution}")
        if self.positive_label == self.negative_label:
            raise ValueError("positive and negative label must differ")
        if {self.label, self.group} & set(self.features) or self.label == self.group:
            raise ValueError("label, group and feature names must be distinct")
        known = set(self.features)
        for name in self.coefficients:
            if name not in known:
                raise ValueError(f"coefficient for unknown feature {name!r}")
        for group, mechanism in self.mechanisms.items():
            if group not in self.group_distribution:
                raise ValueError(f"mechanism for unknown group {group!r}")
            names = set(mechanism.coefficients) | {n for i in mechanism.interactions for n in (i.a, i.b)}
            if names - known:
                raise ValueError(f"group {group!r} refers to unknown features {sorted(names - known)}")
        return self

    def schema(self) -> CohortSchema:
        columns = [
            ColumnSchema(name=name, kind=ColumnKind.NUMERIC if f.kind == "numeric" else ColumnKind.CATEGORICAL)
            for name, f in self.features.items()
        ]
        columns.append(ColumnSchema(name=self.group, kind=ColumnKind.CATEGORICAL, role=ColumnRole.GROUP))
        columns.append(
            ColumnSchema(name=self.label, kind=ColumnKind.CATEGORICAL, role=ColumnRole.LABEL, positive_label=self.positive_label)
        )
        return CohortSchema(columns=tuple(columns))

    def group_coefficients(self, group: str) -> dict[str, float]:
        """Coefficients in effect inside ``group``, one per feature."""
        overrides = self.mechanisms[group].coefficients if group in self.mechanisms else {}
        return {name: overrides.get(name, self.coefficients.get(name, 0.0)) for name in self.features}


class GroupTruth(BaseModel):
    offset: float
    coefficients: dict[str, float]
    interactions: list[Interaction]
    count: int
    positives: int


class GroundTruth(BaseModel):
    """The label model a cohort was drawn from."""

    seed: int
    intercept: float
    prevalence_target: float
    prevalence_realized: float
    noise_sd: float
    coefficients: dict[str, float]
    groups: dict[str, GroupTruth]


@dataclass(frozen=True, eq=False)
class Cohort:
    table: Table = field(repr=False)
    truth: GroundTruth


def _coded(spec: SynthSpec, frame: pd.DataFrame) -> dict[str, np.ndarray]:
    """Features on the score scale: numerics as z-scores, categoricals as +1 (risk) / -1."""
    coded = {}
    for name, feature in spec.features.items():
        values = frame[name].to_numpy()
        if feature.kind == "numeric":
            coded[name] = (values.astype(float) - feature.mean) / feature.sd
        else:
            coded[name] = np.where(values == feature.risk, 1.0, -1.0)
    return coded


def linear_score(spec: SynthSpec, frame: pd.DataFrame) -> np.ndarray:
    """Label log-odds without intercept or noise."""
    coded = _coded(spec, frame)
    groups = frame[spec.group].to_numpy()
    score = np.zeros(len(frame))
    for group in spec.group_distribution:
        rows = groups == group
        if not rows.any():
            continue
        for name, coef in spec.group_coefficients(group).items():
            score[rows] += coef * coded[name][rows]
        mechanism = spec.mechanisms.get(group)
        if mechanism is not None:
            score[rows] += mechanism.offset
            for term in mechanism.interactions:
                score[rows] += term.coef * np.sign(coded[term.a][rows]) * np.sign(coded[term.b][rows])
    return score


def solve_intercept(score: np.ndarray, uniforms: np.ndarray, n_positive: int, iterations: int = 200) -> float:
    """Bisection for an intercept giving exactly ``n_positive`` rows with uniform < expit(intercept + score)."""
    lo, hi = -60.0 - score.max(), 60.0 - score.min()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if int((uniforms < expit(mid + score)).sum()) >= n_positive:
            hi = mid
        else:
            lo = mid
    return hi


def generate(spec: SynthSpec) -> Cohort:
    """Draw ``spec.n_rows`` rows; the same spec always yields the same cohort."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    groups = list(spec.group_distribution)
    frame = pd.DataFrame(index=pd.RangeIndex(n))
    for name, feature in spec.features.items():
        if feature.kind == "numeric":
            frame[name] = np.round(rng.normal(feature.mean, feature.sd, n), 2)
        else:
            values = list(feature.values)
            frame[name] = np.asarray(values, dtype=object)[rng.choice(len(values), size=n, p=list(feature.values.values()))]
    frame[spec.group] = np.asarray(groups, dtype=object)[rng.choice(len(groups), size=n, p=list(spec.group_distribution.values()))]

    score = linear_score(spec, frame)
    if spec.noise_sd > 0:
        score = score + rng.normal(0.0, spec.noise_sd, n)
    uniforms = rng.random(n)
    n_positive = min(max(round(spec.prevalence * n), 1), n - 1)
    intercept = solve_intercept(score, uniforms, n_positive)
    positive = uniforms < expit(intercept + score)
    frame[spec.label] = np.where(positive, spec.positive_label, spec.negative_label)

    schema = spec.schema()
    table = Table.from_frame(schema, frame[schema.names], negative_label=spec.negative_label)
    labels = frame[spec.group].to_numpy()
    truth = GroundTruth(
        seed=spec.seed,
        intercept=intercept,
        prevalence_target=spec.prevalence,
        prevalence_realized=float(positive.mean()),
        noise_sd=spec.noise_sd,
        coefficients={name: spec.coefficients.get(name, 0.0) for name in spec.features},
        groups={
            g: GroupTruth(
                offset=spec.mechanisms[g].offset if g in spec.mechanisms else 0.0,
                coefficients=spec.group_coefficients(g),
                interactions=list(spec.mechanisms[g].interactions) if g in spec.mechanisms else [],
                count=int((labels == g).sum()),
                positives=int(positive[labels == g].sum()),
            )
            for g in groups
        },
    )
    logger.info("Generated %d rows, prevalence %.4f (target %.4f)", n, truth.prevalence_realized, spec.prevalence)
    return Cohort(table=table, truth=truth)


# Presets
def group_mix(name: str) -> dict[str, float]:
    """Named group distribution from the synth config, normalised to sum to 1."""
    mixes = synth_config()["group_mixes"]
    if name not in mixes:
        raise ConfigError(f"unknown group mix {name!r}; known: {sorted(mixes)}")
    shares = {g: float(v) for g, v in mixes[name]["shares"].items()}
    anchor = mixes[name].get("anchor")
    if anchor is None:
        total = sum(shares.values())
        return {g: v / total for g, v in shares.items()}
    rest = sum(v for g, v in shares.items() if g != anchor)
    return {g: v if g == anchor else v * (1.0 - shares[anchor]) / rest for g, v in shares.items()}


def _base(**overrides: Any) -> dict[str, Any]:
    config = synth_config()
    base = {
        "label": config["label"]["name"],
        "positive_label": config["label"]["positive"],
        "negative_label": config["label"]["negative"],
        "group": config["group"],
        "features": config["features"],
        "coefficients": config["coefficients"],
        "prevalence": config["prevalence"],
        "group_distribution": group_mix("ipad"),
    }
    base.update(overrides)
    return base


def _build(data: dict[str, Any]) -> SynthSpec:
    try:
        return SynthSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid synthetic spec: {exc}") from exc


def default_spec(**overrides: Any) -> SynthSpec:
    """Nine-attribute cohort with the IPAD group mix and the configured coefficients."""
    return _build(_base(**overrides))


def observed_spec(**overrides: Any) -> SynthSpec:
    return _build(_base(group_distribution=group_mix("observed"), **overrides))


def null_spec(**overrides: Any) -> SynthSpec:
    """Every coefficient 0: the label carries no information about any column."""
    return _build(_base(coefficients={}, **overrides))


def planted_ablation_spec(effect: float, **overrides: Any) -> SynthSpec:
    """Default cohort whose groups shift the label log-odds by +effect or -effect.

    effect=0 is the null scenario: the group column is then inert and an ablation should move nothing.
    """
    if effect < 0:
        raise ConfigError(f"effect must be >= 0, got {effect}")
    signs = synth_config()["planted_signs"]
    mechanisms = {g: GroupMechanism(offset=sign * effect) for g, sign in signs.items()}
    return _build(_base(mechanisms=mechanisms, **overrides))


def separable_spec(**overrides: Any) -> SynthSpec:
    """Strong coefficients on every feature; any reasonable classifier separates the classes well."""
    preset = synth_config()["separable"]
    return _build(_base(coefficients=preset["coefficients"], prevalence=preset["prevalence"], **overrides))


def mechanism_spec(**overrides: Any) -> SynthSpec:
    """Two groups, one with an additive label model and one driven by a sign interaction."""
    preset = synth_config()["mechanism"]
    shares = {g: float(v) for g, v in preset["shares"].items()}
    mechanisms = {
        g: GroupMechanism(
            coefficients=m.get("coefficients", {}),
            interactions=tuple(Interaction(a=a, b=b, coef=c) for a, b, c in m.get("interactions", [])),
        )
        for g, m in preset["groups"].items()
    }
    data = _base(coefficients={}, prevalence=preset["prevalence"], group_distribution=shares, mechanisms=mechanisms)
    data.update(overrides)
    return _build(data)


def preset_spec(name: str, effect: float = 1.5, **overrides: Any) -> SynthSpec:
    builders = {
        "ipad": default_spec,
        "observed": observed_spec,
        "null": null_spec,
        "separable": separable_spec,
        "mechanism": mechanism_spec,
    }
    if name == "planted":
        return planted_ablation_spec(effect, **overrides)
    if name not in builders:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return builders[name](**overrides)


def load_spec(path: str | Path, **overrides: Any) -> SynthSpec:
    """Read a YAML/JSON spec file; keys it leaves out come from the default cohort."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"synthetic spec file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping")
    data.update(overrides)
    return _build(_base(**data))


def expected_count(spec: SynthSpec, group: str) -> tuple[float, float]:
    """Mean and standard deviation of a group's row count."""
    p = spec.group_distribution[group]
    return spec.n_rows * p, math.sqrt(spec.n_rows * p * (1.0 - p))
