from __future__ import annotations

from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pcadrank.errors import ConfigError

CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "classifiers.yaml"


class ClassifierKind(str, Enum):
    # report column order
    RULE_INDUCTION = "rule_induction"
    MLP = "mlp"
    GLM = "glm"
    GBT = "gbt"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"

    @property
    def title(self) -> str:
        return classifier_config()[self.value]["title"]


@lru_cache(maxsize=1)
def classifier_config() -> dict[str, Any]:
    with open(CONFIG_PATH, "r") as f:
        return yaml.safe_load(f)


def _check_value(kind: str, key: str, value: Any, rule: dict[str, Any]) -> None:
    if "choices" in rule:
        if value not in rule["choices"]:
            raise ValueError(f"{kind}.{key} must be one of {rule['choices']}, got {value!r}")
        return
    default = rule["default"]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{kind}.{key} must be a number, got {value!r}")
    if isinstance(default, int) and not isinstance(value, int):
        raise ValueError(f"{kind}.{key} must be an integer, got {value!r}")
    if not rule["min"] <= value <= rule["max"]:
        raise ValueError(f"{kind}.{key}={value} outside [{rule['min']}, {rule['max']}]")


class ClassifierSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ClassifierKind
    hyperparameters: dict[str, int | float | str] = Field(default_factory=dict)
    seed: int = 0

    @model_validator(mode="after")
    def _validate_hyperparameters(self) -> ClassifierSpec:
        allowed = classifier_config()[self.kind.value]["params"]
        for key, value in self.hyperparameters.items():
            if key not in allowed:
                raise ValueError(f"unknown hyperparameter {key!r} for {self.kind.value}; allowed: {sorted(allowed)}")
            _check_value(self.kind.value, key, value, allowed[key])
        return self

    def resolved(self) -> dict[str, Any]:
        """Defaults from the YAML table overridden by the spec's own values."""
        params = {key: rule["default"] for key, rule in classifier_config()[self.kind.value]["params"].items()}
        params.update(self.hyperparameters)
        return params

    def with_seed(self, seed: int) -> ClassifierSpec:
        return self.model_copy(update={"seed": seed})


def make_spec(kind: str | ClassifierKind, seed: int = 0, **hyperparameters: Any) -> ClassifierSpec:
    try:
        return ClassifierSpec(kind=kind, hyperparameters=hyperparameters, seed=seed)
    except ValidationError as exc:
        raise ConfigError(f"invalid classifier spec for {kind}: {exc}") from exc


def default_specs(kinds: list[str] | None = None, seed: int = 0) -> list[ClassifierSpec]:
    """One default spec per kind, in report order; ``kinds`` may name a subset."""
    known = [k.value for k in ClassifierKind]
    wanted = known if not kinds or kinds == ["all"] else kinds
    unknown = [k for k in wanted if k not in known]
    if unknown:
        raise ConfigError(f"unknown classifier(s) {unknown}; choose from {known} or 'all'")
    return [make_spec(k, seed) for k in known if k in wanted]
