"""Run configuration: defaults, then an optional YAML run file, then the environment, then flags."""

from __future__ import annotations

import os
from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from pcadrank.errors import ConfigError
from pcadrank.smote import SmoteConfig

ENV_PREFIX = "PCADRANK_"
ENV_KEYS = ("n_jobs", "log_level")


class Command(str, Enum):
    WEIGH = "weigh"
    ABLATE = "ablate"
    GROUPS = "groups"
    SYNTH = "synth"
    REPORT = "report"


class OutputFormat(str, Enum):
    CSV = "csv"
    MD = "md"


# subcommands that read a cohort file
NEEDS_DATA = {Command.WEIGH, Command.ABLATE, Command.GROUPS}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    data: Path | None = None
    schema_file: Path | None = None
    out: Path = Path("out")
    seed: int = 0
    folds: int = Field(default=10, ge=2)
    bins: int = Field(default=10, ge=1)
    relief_k: int = Field(default=10, ge=1)
    relief_samples: int | None = Field(default=None, ge=1)
    smote: bool = True
    smote_k: int = Field(default=5, ge=1)
    smote_ratio: float = Field(default=1.0, gt=0.0, le=1.0)
    classifiers: list[str] = Field(default_factory=lambda: ["all"])
    feature: str | None = None
    format: OutputFormat = OutputFormat.CSV
    save_model: Path | None = None
    top_n: int = Field(default=5, ge=1)
    n_jobs: int = 1
    log_level: str = "INFO"
    synth_spec: Path | None = None
    preset: str = "ipad"
    effect: float = Field(default=1.5, ge=0.0)
    n_rows: int | None = Field(default=None, ge=100)

    @field_validator("classifiers", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return value

    @field_validator("n_jobs")
    @classmethod
    def _nonzero_jobs(cls, value: int) -> int:
        if value == 0:
            raise ValueError("n_jobs must be a positive count or negative (joblib style), not 0")
        return value

    @model_validator(mode="after")
    def _paths_resolvable(self) -> RunConfig:
        if self.command in NEEDS_DATA and self.data is None:
            raise ValueError(f"{self.command.value} needs --data")
        for name in ("data", "schema_file", "synth_spec"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ValueError(f"{name} file not found: {path}")
        return self

    def smote_config(self) -> SmoteConfig | None:
        if not self.smote:
            return None
        return SmoteConfig(k_neighbors=self.smote_k, target_ratio=self.smote_ratio, seed=self.seed)


def load_env() -> None:
    _ = load_dotenv(find_dotenv(usecwd=True))


def env_overrides() -> dict[str, str]:
    """``PCADRANK_N_JOBS`` and ``PCADRANK_LOG_LEVEL`` after loading an optional .env file."""
    load_env()
    return {key: os.environ[ENV_PREFIX + key.upper()] for key in ENV_KEYS if os.environ.get(ENV_PREFIX + key.upper())}


def read_run_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r") as f:
            values = yaml.safe_load(f) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must hold a mapping of settings")
    # file keys follow the flag spelling
    return {key.replace("-", "_"): value for key, value in values.items()}


def build_run_config(command: str, flags: dict[str, Any], config_file: str | Path | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    if config_file is not None:
        values.update(read_run_file(config_file))
    values.update(env_overrides())
    values.update({key: value for key, value in flags.items() if value is not None})
    values["command"] = command
    if "schema" in values:
        values["schema_file"] = values.pop("schema")
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
