from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import pandas as pd

from pcadrank.classifiers.boosting import GradientBoostedTrees
from pcadrank.classifiers.encoding import FeatureEncoder
from pcadrank.classifiers.linear import LogisticGLM
from pcadrank.classifiers.mlp import MLP, gradient_check
from pcadrank.classifiers.rules import RuleInduction
from pcadrank.classifiers.spec import ClassifierKind, ClassifierSpec
from pcadrank.classifiers.tree import DecisionTree, RandomForest
from pcadrank.dataio import Table, content_order
from pcadrank.errors import ComputeError, ConfigError, DataError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MIN_TRAIN_ROWS = 10

ESTIMATORS = {
    ClassifierKind.RULE_INDUCTION: RuleInduction,
    ClassifierKind.MLP: MLP,
    ClassifierKind.GLM: LogisticGLM,
    ClassifierKind.GBT: GradientBoostedTrees,
    ClassifierKind.DECISION_TREE: DecisionTree,
    ClassifierKind.RANDOM_FOREST: RandomForest,
}
# kinds trained on standardised numerics
STANDARDIZED = {ClassifierKind.GLM, ClassifierKind.MLP}


class Estimator(Protocol):
    def fit(self, X: np.ndarray, y: np.ndarray, seed: int, n_jobs: int = 1) -> Estimator: ...

    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...

    def to_dict(self) -> dict[str, Any]: ...

    def load(self, data: dict[str, Any]) -> Estimator: ...


@dataclass(frozen=True, eq=False)
class Model:
    spec: ClassifierSpec
    encoder: FeatureEncoder
    estimator: Estimator = field(repr=False)

    def predict_frame(self, frame: pd.DataFrame) -> np.ndarray:
        return np.clip(self.estimator.predict_proba(self.encoder.transform(frame)), 0.0, 1.0)


def encode(spec: ClassifierSpec, train: Table) -> tuple[FeatureEncoder, np.ndarray, np.ndarray]:
    if train.n_rows < MIN_TRAIN_ROWS:
        raise ComputeError(f"training set has {train.n_rows} rows, at least {MIN_TRAIN_ROWS} are needed")
    if 0 in train.class_counts():
        raise ComputeError("single-class training set")
    encoder = FeatureEncoder.fit(train, standardize=spec.kind in STANDARDIZED)
    X, y = encoder.transform(train.frame), train.y.astype(float)
    order = content_order(X, y)
    return encoder, X[order], y[order]


def fit(spec: ClassifierSpec, train: Table, n_jobs: int = 1) -> Model:
    encoder, X, y = encode(spec, train)
    estimator = ESTIMATORS[spec.kind](**spec.resolved()).fit(X, y, seed=spec.seed, n_jobs=n_jobs)
    logger.debug("Fitted %s on %d rows x %d inputs", spec.kind.value, X.shape[0], X.shape[1])
    return Model(spec, encoder, estimator)


def predict(model: Model, row: Mapping[str, Any]) -> float:
    """Positive-class score of one row; the label is not required."""
    missing = [name for name in model.encoder.features if name not in row]
    if missing:
        raise DataError(f"schema mismatch: row lacks {missing}")
    return float(model.predict_frame(pd.DataFrame([{name: row[name] for name in model.encoder.features}]))[0])


def predict_table(model: Model, table: Table) -> np.ndarray:
    return model.predict_frame(table.frame)


def mlp_gradient_check(spec: ClassifierSpec, train: Table, epsilon: float) -> float:
    if spec.kind is not ClassifierKind.MLP:
        raise ConfigError(f"gradient check needs an mlp spec, got {spec.kind.value}")
    if not 1e-7 <= epsilon <= 1e-3:
        raise ConfigError(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    _, X, y = encode(spec, train)
    return gradient_check(X, y, spec.resolved()["hidden"], epsilon, np.random.default_rng(spec.seed))


# JSON model documents
def model_document(model: Model) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.spec.kind.value,
        "hyperparameters": model.spec.resolved(),
        "seed": model.spec.seed,
        "encoding": model.encoder.to_dict(),
        "parameters": model.estimator.to_dict(),
    }


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_document(model), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> Model:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {document.get('format_version')!r} in {path}")
    spec = ClassifierSpec(kind=document["kind"], hyperparameters=document["hyperparameters"], seed=document["seed"])
    estimator = ESTIMATORS[spec.kind](**spec.resolved()).load(document["parameters"])
    return Model(spec, FeatureEncoder.from_dict(document["encoding"]), estimator)
