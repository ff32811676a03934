"""Boosting loop with automatic termination.

Each iteration refreshes the derivatives at the current predictions, grows
one tree, and accepts it only if the learning-rate-adjusted generalization
test passes:

    delta*(2 - delta) * R_tree + delta * C_tree > 0

R_tree and C_tree are the tree's training-loss reduction and optimism,
each summed over its performed splits. Scaling a tree by delta scales its
training-loss reduction by delta*(2 - delta) (exactly for quadratic loss)
while its optimism scales linearly, hence the asymmetric factors. The
first failing tree is discarded and training stops.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import losses
from .errors import DataError, IcBoostError
from .criterion import ExpectedMaxCache
from .losses import GradHessBuffer, LossSpec
from .splitting import PresortedMatrix
from .tree import Tree, build_tree

VERBOSE_FMT = "it: {it}  |  n-leaves: {leaves}  |  tr loss: {tr:.4f}  |  gen loss: {gen:.4f}"


@dataclass(frozen=True)
class TrainConfig:
    delta: float = 0.01
    mode: str = "global_subset"
    verbose: int = 0  # print period; 0 silences output
    seed: int = 1
    n_sim: int = 1000
    max_iterations: int = 30000

    def __post_init__(self) -> None:
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class TrainingLogRecord:
    iteration: int
    n_leaves: int
    train_loss: float
    gen_loss: float


@dataclass
class EnsembleModel:
    """Deployable boosting artifact: f(x) = f0 + delta * sum_k tree_k(x)."""

    loss: LossSpec
    f0: float
    delta: float
    trees: list[Tree]
    n_features: int
    mode: str
    seed: int
    log: list[TrainingLogRecord] = field(default_factory=list)
    stop_reason: str = ""
    stop_detail: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _check_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"non-finite feature value at row {r}, column {c}")
    return X


def train(
    X,
    y,
    spec: LossSpec,
    config: TrainConfig = TrainConfig(),
    callback: Callable[[TrainingLogRecord, Tree], None] | None = None,
) -> EnsembleModel:
    """Boost trees on (X, y) until the stopping test rejects the next tree."""
    X = _check_matrix(X)
    y = losses.validate_response(spec, y)
    if y.size != X.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.size}")
    if X.shape[0] < 2:
        raise DataError("training needs at least 2 rows")

    data = PresortedMatrix(X)
    rng = np.random.default_rng(config.seed)
    emax = ExpectedMaxCache(config.n_sim, rng)
    delta = config.delta

    f0 = losses.initial_prediction(spec, y)
    pred = np.full(y.size, f0)
    model = EnsembleModel(
        loss=spec,
        f0=f0,
        delta=delta,
        trees=[],
        n_features=X.shape[1],
        mode=config.mode,
        seed=config.seed,
    )

    optimism_acc = 0.0
    for it in range(1, config.max_iterations + 1):
        try:
            gh: GradHessBuffer = losses.grad_hess(spec, y, pred)
            tree, tree_train_pred = build_tree(data, gh.g, gh.h, config.mode, emax)
        except IcBoostError as exc:
            raise type(exc)(f"at boosting iteration {it}: {exc}") from exc

        r_tree = tree.total_reduction
        c_tree = tree.total_optimism
        if not (delta * (2.0 - delta) * r_tree + delta * c_tree > 0.0):
            model.stop_reason = "criterion"
            model.stop_detail = {
                "iteration": it,
                "rejected_reduction": r_tree,
                "rejected_optimism": c_tree,
            }
            break

        model.trees.append(tree)
        pred = pred + delta * tree_train_pred
        optimism_acc += -delta * c_tree
        try:
            train_loss = float(np.mean(losses.loss_value(spec, y, pred)))
        except IcBoostError as exc:
            raise type(exc)(f"at boosting iteration {it}: {exc}") from exc
        record = TrainingLogRecord(
            iteration=it,
            n_leaves=tree.n_leaves,
            train_loss=train_loss,
            gen_loss=train_loss + optimism_acc,
        )
        model.log.append(record)
        if config.verbose > 0 and (it == 1 or it % config.verbose == 0):
            print(
                VERBOSE_FMT.format(
                    it=it,
                    leaves=record.n_leaves,
                    tr=record.train_loss,
                    gen=record.gen_loss,
                )
            )
        if callback is not None:
            callback(record, tree)
    else:
        model.stop_reason = "max_iterations"
        model.stop_detail = {"iteration": config.max_iterations}
        warnings.warn(
            f"training stopped at the max_iterations cap ({config.max_iterations}) "
            "before the stopping criterion fired",
            RuntimeWarning,
            stacklevel=2,
        )
    return model


def predict(model: EnsembleModel, X) -> np.ndarray:
    """Link-scale predictions f0 + delta * sum of tree outputs, per row."""
    X = _check_matrix(X)
    if X.shape[1] != model.n_features:
        raise DataError(
            f"expected {model.n_features} features, got {X.shape[1]}"
        )
    out = np.full(X.shape[0], model.f0)
    for tree in model.trees:
        out += model.delta * tree.predict(X)
    return out


def predict_response(model: EnsembleModel, X) -> np.ndarray:
    """Response-scale predictions: the inverse link applied to `predict`."""
    return np.asarray(losses.mean_from_link(model.loss, predict(model, X)))
