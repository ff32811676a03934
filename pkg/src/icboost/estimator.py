"""Scikit-learn style estimator around the boosting engine.

The estimator follows the sklearn contract (``get_params``/``set_params``
via ``BaseEstimator``, ``fit`` returning ``self``, trailing-underscore
fitted attributes), so it composes with pipelines, ``clone`` and model
selection utilities. ``predict`` returns link-scale values per the engine
contract; use :meth:`predict_response` for the inverse-link (mean) scale.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import ensemble, validation
from .errors import ConfigurationError
from .losses import CLI_LOSS_NAMES, LOSS_KINDS, LossSpec

_ALGORITHMS = {
    "global-subset": "global_subset",
    "global_subset": "global_subset",
    "vanilla": "vanilla",
}


def _normalize_loss(loss: str) -> str:
    if loss in CLI_LOSS_NAMES:
        return CLI_LOSS_NAMES[loss]
    if loss in LOSS_KINDS:
        return loss
    raise ConfigurationError(
        f"unknown loss {loss!r}; expected one of {sorted(CLI_LOSS_NAMES)}"
    )


class ICBoostRegressor(BaseEstimator):
    """Gradient tree boosting with automatic complexity selection.

    Tree depth, tree count and tree-growth order are chosen during fitting
    by an information criterion on the profiled split gains; there is
    nothing to cross-validate except, optionally, the learning rate.

    Parameters
    ----------
    loss : str
        One of ``mse``, ``logloss``, ``gamma::neginv``, ``gamma::log``,
        ``poisson``, ``negbinom`` (underscore spellings also accepted).
    learning_rate : float
        Shrinkage applied to each accepted tree, in (0, 1].
    algorithm : str
        ``"global-subset"`` (default) stops deepening a tree as soon as
        starting the next boosting iteration promises more, ``"vanilla"``
        grows each tree until its own split gate fails.
    dispersion : float, optional
        Negative binomial dispersion; required iff loss is ``negbinom``.
    n_sim : int
        Monte-Carlo replicates for the split-gain optimism estimate.
    max_iterations : int
        Safety cap on boosting iterations.
    verbose : int
        Print a progress line at the first and every ``verbose``-th
        iteration; 0 is silent.
    random_state : int
        Seed for the optimism simulations (training is deterministic
        given data and seed).
    """

    def __init__(
        self,
        loss: str = "mse",
        learning_rate: float = 0.01,
        algorithm: str = "global-subset",
        dispersion: float | None = None,
        n_sim: int = 1000,
        max_iterations: int = 30000,
        verbose: int = 0,
        random_state: int = 1,
    ):
        self.loss = loss
        self.learning_rate = learning_rate
        self.algorithm = algorithm
        self.dispersion = dispersion
        self.n_sim = n_sim
        self.max_iterations = max_iterations
        self.verbose = verbose
        self.random_state = random_state

    def _config(self) -> ensemble.TrainConfig:
        if self.algorithm not in _ALGORITHMS:
            raise ConfigurationError(
                f"unknown algorithm {self.algorithm!r}; "
                f"expected one of {sorted(set(_ALGORITHMS))}"
            )
        return ensemble.TrainConfig(
            delta=self.learning_rate,
            mode=_ALGORITHMS[self.algorithm],
            verbose=self.verbose,
            seed=self.random_state,
            n_sim=self.n_sim,
            max_iterations=self.max_iterations,
        )

    def fit(self, X, y, callback=None):
        spec = LossSpec(_normalize_loss(self.loss), self.dispersion)
        self.model_ = ensemble.train(X, y, spec, self._config(), callback=callback)
        self.n_features_in_ = self.model_.n_features
        self.training_log_ = self.model_.log
        return self

    def _fitted(self) -> ensemble.EnsembleModel:
        if not hasattr(self, "model_"):
            raise ConfigurationError("estimator is not fitted; call fit first")
        return self.model_

    def predict(self, X) -> np.ndarray:
        """Link-scale predictions."""
        return ensemble.predict(self._fitted(), X)

    def predict_response(self, X) -> np.ndarray:
        """Response-scale (inverse link) predictions."""
        return ensemble.predict_response(self._fitted(), X)

    def ks_validate(self, X, y, random_state=None) -> validation.KsResult:
        """Kolmogorov-Smirnov goodness-of-fit of the fitted model on (X, y)."""
        return validation.ks_validate(self._fitted(), y, X, rng=random_state)

    @property
    def feature_importances_(self) -> np.ndarray:
        """Normalized generalization-gain shares, one entry per feature."""
        return validation.feature_importance(self._fitted()).share
