"""Six binary classifiers written against numpy, each producing a positive-class score in [0, 1]."""

from pcadrank.classifiers.model import (
    FORMAT_VERSION,
    Model,
    fit,
    load_model,
    mlp_gradient_check,
    predict,
    predict_table,
    save_model,
)
from pcadrank.classifiers.spec import ClassifierKind, ClassifierSpec, default_specs, make_spec

__all__ = [
    "FORMAT_VERSION",
    "ClassifierKind",
    "ClassifierSpec",
    "Model",
    "default_specs",
    "fit",
    "load_model",
    "make_spec",
    "mlp_gradient_check",
    "predict",
    "predict_table",
    "save_model",
]
