"""Goodness-of-fit via the Kolmogorov-Smirnov test, and feature importance.

A correctly specified model maps responses to standard-uniform values:
continuous families through the fitted conditional CDF, discrete families
through the randomized transform

    u_i = F(y_i - 1; theta(x_i)) + V_i * p(y_i; theta(x_i)),   V_i ~ U(0,1).

Nuisance parameters the boosting model does not predict (Gaussian
variance, gamma shape) are maximum-likelihood estimates computed from the
supplied data at call time; the negative binomial dispersion is taken from
the model configuration, which always carries it.

Feature importance accumulates, per split feature, the approximate
generalization-loss reduction delta*(2-delta)*R_t + delta*C_t of every
internal node, not the raw training gain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import losses
from .ensemble import EnsembleModel, predict
from .errors import DataError
from .tree import SplitNode

_KS_SERIES_TOL = 1e-12
_SHAPE_MAX = 1e12


@dataclass
class KsResult:
    statistic: float
    p_value: float
    u: np.ndarray = field(repr=False)
    nuisance: dict[str, float] = field(default_factory=dict)


@dataclass
class ImportanceVector:
    """Per-feature generalization-gain totals and their normalized shares."""

    raw: np.ndarray
    share: np.ndarray
    floored_features: list[int] = field(default_factory=list)


def _gamma_shape_mle(y: np.ndarray, mu: np.ndarray) -> float:
    """Profile MLE of the gamma shape given per-observation means.

    Solves log(a) - digamma(a) = M with M = mean(y/mu - log(y/mu)) - 1 by
    Newton iterations in log(a); the left side is strictly decreasing, so
    the root is unique. M -> 0 (perfect fit) pushes the shape to infinity,
    capped at 1e12.
    """
    ratio = y / mu
    M = float(np.mean(ratio - np.log(ratio))) - 1.0
    if M <= 1.0 / (2.0 * _SHAPE_MAX):
        return _SHAPE_MAX
    t = math.log(max(1.0 / (2.0 * M), 1e-8))  # asymptotic solution for small M
    for _ in range(100):
        a = math.exp(t)
        phi = math.log(a) - special.digamma(a) - M
        dphi_dt = a * (1.0 / a - special.polygamma(1, a))
        step = phi / dphi_dt
        t -= step
        if abs(step) < 1e-12:
            break
    return float(min(math.exp(t), _SHAPE_MAX))


def estimate_nuisance(model: EnsembleModel, y: np.ndarray, f: np.ndarray) -> dict[str, float]:
    """MLEs of the non-predicted distribution parameters, if the family has any."""
    kind = model.loss.kind
    if kind == "mse":
        return {"variance": float(np.mean((y - f) ** 2))}
    if kind in ("gamma_neginv", "gamma_log"):
        mu = np.asarray(losses.mean_from_link(model.loss, f))
        return {"shape": _gamma_shape_mle(y, mu)}
    if kind == "negbinom":
        return {"dispersion": float(model.loss.dispersion)}
    return {}


def ks_transform(
    model: EnsembleModel,
    y,
    X,
    rng: np.random.Generator,
    nuisance: dict[str, float] | None = None,
) -> np.ndarray:
    """Transformed values u that are standard uniform under a correct model.

    ``nuisance`` overrides the call-time MLEs (useful for testing against
    known data-generating parameters).
    """
    spec = model.loss
    ya = losses.validate_response(spec, y)
    f = predict(model, X)
    if ya.size != f.size:
        raise DataError(f"y has {ya.size} rows but X has {f.size}")
    if nuisance is None:
        nuisance = estimate_nuisance(model, ya, f)
    nu = next(iter(nuisance.values())) if nuisance else None
    if spec.is_discrete:
        v = rng.uniform(size=ya.size)
        u = losses.cdf(spec, ya - 1.0, f, nu) + v * losses.pmf(spec, ya, f, nu)
    else:
        u = losses.cdf(spec, ya, f, nu)
    return np.asarray(u, dtype=np.float64)


def _kolmogorov_sf(t: float) -> float:
    """P(K > t) for the asymptotic Kolmogorov distribution.

    Alternating series 2*sum_k (-1)^(k-1) exp(-2 k^2 t^2), truncated once a
    term drops below 1e-12.
    """
    if t <= 1e-8:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 100001):
        term = math.exp(-2.0 * (k * t) ** 2)
        if term < _KS_SERIES_TOL:
            break
        total += sign * term
        sign = -sign
    return min(max(2.0 * total, 0.0), 1.0)


def ks_test(u) -> KsResult:
    """One-sample Kolmogorov-Smirnov test of u against U(0,1)."""
    ua = np.asarray(u, dtype=np.float64)
    if ua.size == 0:
        raise DataError("empty sample")
    if np.any(ua < 0.0) or np.any(ua > 1.0) or not np.all(np.isfinite(ua)):
        i = int(np.flatnonzero((ua < 0) | (ua > 1) | ~np.isfinite(ua))[0])
        raise DataError(f"u values must lie in [0, 1]; u[{i}] = {ua[i]!r}")
    n = ua.size
    us = np.sort(ua)
    grid = np.arange(1, n + 1, dtype=np.float64)
    d_plus = np.max(grid / n - us)
    d_minus = np.max(us - (grid - 1.0) / n)
    d = float(max(d_plus, d_minus))
    return KsResult(statistic=d, p_value=_kolmogorov_sf(math.sqrt(n) * d), u=ua)


def ks_validate(
    model: EnsembleModel,
    y,
    X,
    rng: np.random.Generator | int | None = None,
    nuisance: dict[str, float] | None = None,
) -> KsResult:
    """Transform (y, X) through the fitted model and KS-test the result."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ya = losses.validate_response(model.loss, y)
    f = predict(model, X)
    if nuisance is None:
        nuisance = estimate_nuisance(model, ya, f)
    u = ks_transform(model, ya, X, rng, nuisance)
    result = ks_test(u)
    result.nuisance = nuisance
    return result


def feature_importance(model: EnsembleModel) -> ImportanceVector:
    """Accumulated approximate generalization-loss reduction per split feature.

    Internal nodes contribute delta*(2-delta)*R + delta*C to their split
    feature. Forced-root contributions can be negative; a feature whose
    total lands below zero is floored at 0 (with a warning), since a
    negative importance has no interpretation in the importance ranking.
    """
    delta = model.delta
    raw = np.zeros(model.n_features)
    for tree in model.trees:
        stack = [tree.root]
        while stack:
            node = stack.pop()
            if isinstance(node, SplitNode):
                raw[node.feature] += (
                    delta * (2.0 - delta) * node.reduction + delta * node.optimism
                )
                stack.append(node.right)
                stack.append(node.left)
    floored = [int(j) for j in np.flatnonzero(raw < 0.0)]
    if floored:
        warnings.warn(
            f"importance floored at 0 for features {floored} "
            "(forced root splits can contribute negative totals)",
            RuntimeWarning,
            stacklevel=2,
        )
        raw = np.maximum(raw, 0.0)
    total = float(raw.sum())
    share = raw / total if total > 0.0 else np.zeros_like(raw)
    return ImportanceVector(raw=raw, share=share, floored_features=floored)
