"""Gradient tree boosting with automatic complexity selection.

Tree depth, tree count, and tree-growth order are chosen while training
by an information criterion on the greedily profiled split gains, so no
cross-validated hyperparameter tuning is needed. The learning rate is the
only free knob and defaults to 0.01.

Typical use::

    from icboost import ICBoostRegressor

    model = ICBoostRegressor(loss="mse").fit(X_train, y_train)
    y_hat = model.predict(X_test)
    result = model.ks_validate(X_test, y_test)

A functional API (``train``/``predict``/``predict_response``), model
persistence (``save``/``load``) and a CLI (``icboost train|predict|
validate|importance|benchmark``) are also provided.
"""

from .ensemble import EnsembleModel, TrainConfig, TrainingLogRecord, predict, predict_response, train
from .errors import (
    ConfigurationError,
    ConvexityError,
    DataError,
    DegenerateResponseError,
    DomainError,
    IcBoostError,
    ModelFormatError,
)
from .estimator import ICBoostRegressor
from .losses import GradHessBuffer, LossSpec
from .model_io import load, save
from .validation import ImportanceVector, KsResult, feature_importance, ks_test, ks_transform, ks_validate

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConvexityError",
    "DataError",
    "DegenerateResponseError",
    "DomainError",
    "EnsembleModel",
    "GradHessBuffer",
    "ICBoostRegressor",
    "IcBoostError",
    "ImportanceVector",
    "KsResult",
    "LossSpec",
    "ModelFormatError",
    "TrainConfig",
    "TrainingLogRecord",
    "feature_importance",
    "ks_test",
    "ks_transform",
    "ks_validate",
    "load",
    "predict",
    "predict_response",
    "save",
    "train",
]
