"""Loss families, their derivatives, and distribution functions.

Six negative log-likelihood losses are supported, each tied to one link
function:

    ==============  =================  ===============
    kind            distribution       link
    ==============  =================  ===============
    mse             Gaussian           mu = f
    logloss         Bernoulli          log(mu/(1-mu)) = f
    gamma_neginv    Gamma              -1/mu = f
    gamma_log       Gamma              log(mu) = f
    poisson         Poisson            log(mu) = f
    negbinom        Negative binomial  log(mu) = f
    ==============  =================  ===============

Loss values are negative log-likelihood contributions up to additive
constants that do not depend on ``f`` (mse uses 0.5*(y-f)^2, so its
second derivative is exactly 1 and leaf weights are mean residuals).
The gamma losses fix the shape parameter at 1 while boosting; the shape
only rescales the gradient and so cancels from every argmin over ``f``.
It is profiled at validation time instead (see ``icboost.validation``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import (
    ConfigurationError,
    ConvexityError,
    DegenerateResponseError,
    DomainError,
)

LOSS_KINDS = ("mse", "logloss", "gamma_neginv", "gamma_log", "poisson", "negbinom")

# CLI-facing spellings.
CLI_LOSS_NAMES = {
    "mse": "mse",
    "logloss": "logloss",
    "gamma::neginv": "gamma_neginv",
    "gamma::log": "gamma_log",
    "poisson": "poisson",
    "negbinom": "negbinom",
}
_KIND_TO_CLI = {v: k for k, v in CLI_LOSS_NAMES.items()}

# gamma_neginv predictions must stay strictly negative; anything at or
# above this threshold aborts instead of being clamped, since clamping
# would silently corrupt the optimism estimates downstream.
NEGINV_F_MAX = -1e-12

_NEWTON_TOL = 1e-9
_NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class LossSpec:
    """Identifies a loss family; ``dispersion`` is required iff kind is negbinom."""

    kind: str
    dispersion: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError(
                f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}"
            )
        if self.kind == "negbinom":
            if self.dispersion is None:
                raise ConfigurationError("negbinom requires a dispersion parameter")
            if not (self.dispersion > 0):
                raise ConfigurationError(
                    f"negbinom dispersion must be > 0, got {self.dispersion}"
                )

    @property
    def cli_name(self) -> str:
        return _KIND_TO_CLI[self.kind]

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("logloss", "poisson", "negbinom")

    @classmethod
    def from_cli_name(cls, name: str, dispersion: float | None = None) -> "LossSpec":
        if name not in CLI_LOSS_NAMES:
            raise ConfigurationError(
                f"unknown loss {name!r}; expected one of {sorted(CLI_LOSS_NAMES)}"
            )
        return cls(CLI_LOSS_NAMES[name], dispersion)


@dataclass
class GradHessBuffer:
    """Per-observation first and second derivatives of the loss at ``f``."""

    g: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        if self.g.shape != self.h.shape:
            raise ValueError("g and h must have identical shape")
        if not np.all(self.h > 0):
            i = int(np.argmin(self.h))
            raise ConvexityError(
                f"non-positive second derivative h[{i}] = {self.h[i]!r}"
            )


def _as1d(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


def validate_response(spec: LossSpec, y) -> np.ndarray:
    """Check that ``y`` lies in the response domain of the family.

    Returns ``y`` as a float64 array. Raises :class:`DomainError` naming the
    first offending value.
    """
    arr = _as1d(y)
    if arr.size == 0:
        raise DomainError("empty response vector")
    if not np.all(np.isfinite(arr)):
        i = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DomainError(f"non-finite response y[{i}] = {arr[i]!r}")
    kind = spec.kind
    if kind == "logloss":
        bad = (arr != 0.0) & (arr != 1.0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"logloss requires binary response; y[{i}] = {arr[i]!r}")
    elif kind in ("gamma_neginv", "gamma_log"):
        if np.any(arr <= 0):
            i = int(np.argmin(arr))
            raise DomainError(f"gamma requires y > 0; y[{i}] = {arr[i]!r}")
    elif kind in ("poisson", "negbinom"):
        bad = (arr < 0) | (arr != np.floor(arr))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"{kind} requires nonnegative integer response; y[{i}] = {arr[i]!r}"
            )
    return arr


def validate_link_domain(spec: LossSpec, f) -> np.ndarray:
    """Check that predictions ``f`` lie in the link's valid domain."""
    arr = _as1d(f)
    if not np.all(np.isfinite(arr)):
        i = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DomainError(f"non-finite prediction f[{i}] = {arr[i]!r}")
    if spec.kind == "gamma_neginv" and np.any(arr >= NEGINV_F_MAX):
        i = int(np.argmax(arr))
        raise DomainError(
            f"gamma::neginv prediction must be < {NEGINV_F_MAX}; f[{i}] = {arr[i]!r}"
        )
    return arr


def _softplus(f: np.ndarray) -> np.ndarray:
    return np.maximum(f, 0.0) + np.log1p(np.exp(-np.abs(f)))


def loss_value(spec: LossSpec, y, f):
    """Negative log-likelihood contribution, up to constants free of ``f``.

    Accepts scalars or aligned arrays; returns the same shape as the inputs.
    """
    ya = validate_response(spec, y)
    fa = validate_link_domain(spec, f)
    ya, fa = np.broadcast_arrays(ya, fa)
    kind = spec.kind
    if kind == "mse":
        out = 0.5 * (ya - fa) ** 2
    elif kind == "logloss":
        out = _softplus(fa) - ya * fa
    elif kind == "poisson":
        out = np.exp(fa) - ya * fa
    elif kind == "gamma_log":
        out = ya * np.exp(-fa) + fa
    elif kind == "gamma_neginv":
        out = -ya * fa - np.log(-fa)
    else:  # negbinom
        r = spec.dispersion
        out = -ya * fa + (ya + r) * np.logaddexp(fa, np.log(r))
    if np.isscalar(y) and np.isscalar(f):
        return float(out[0])
    return out


def grad_hess(spec: LossSpec, y, f) -> GradHessBuffer:
    """Analytic first/second derivatives of :func:`loss_value` w.r.t. ``f``.

    The buffer constructor enforces ``h > 0`` everywhere; a violation is an
    error, never a silent clamp.
    """
    ya = validate_response(spec, y)
    fa = validate_link_domain(spec, f)
    if ya.shape != fa.shape:
        raise DomainError(
            f"response/prediction length mismatch: {ya.shape} vs {fa.shape}"
        )
    kind = spec.kind
    if kind == "mse":
        g = fa - ya
        h = np.ones_like(fa)
    elif kind == "logloss":
        p = special.expit(fa)
        g = p - ya
        h = p * (1.0 - p)
    elif kind == "poisson":
        ef = np.exp(fa)
        g = ef - ya
        h = ef
    elif kind == "gamma_log":
        yemf = ya * np.exp(-fa)
        g = 1.0 - yemf
        h = yemf
    elif kind == "gamma_neginv":
        g = -ya - 1.0 / fa
        h = 1.0 / fa**2
    else:  # negbinom
        r = spec.dispersion
        ef = np.exp(fa)
        frac = ef / (ef + r)
        g = (ya + r) * frac - ya
        h = r * (ya + r) * frac / (ef + r)
    return GradHessBuffer(g=g, h=h)


_DEGENERATE_HINTS = {
    "logloss": "all labels equal",
    "poisson": "all counts zero",
    "negbinom": "all counts zero",
}


def initial_prediction(spec: LossSpec, y) -> float:
    """Constant link-scale prediction minimizing the mean loss over ``y``.

    Newton iterations on the aggregated derivatives (sum g, sum h), stopped
    when the step magnitude drops below 1e-9 or after 50 iterations. For mse
    this is exactly the mean of y.
    """
    ya = validate_response(spec, y)
    mean = float(np.mean(ya))
    kind = spec.kind
    if kind == "mse":
        f = mean
    elif kind == "logloss":
        if mean <= 0.0 or mean >= 1.0:
            raise DegenerateResponseError(
                f"no finite minimizer for logloss: {_DEGENERATE_HINTS[kind]}"
            )
        f = float(np.log(mean / (1.0 - mean)))
    elif kind == "gamma_neginv":
        f = -1.0 / mean
    else:  # log links
        if mean <= 0.0:
            raise DegenerateResponseError(
                f"no finite minimizer for {kind}: {_DEGENERATE_HINTS.get(kind, 'mean is zero')}"
            )
        f = float(np.log(mean))
    for _ in range(_NEWTON_MAX_ITER):
        gh = grad_hess(spec, ya, np.full_like(ya, f))
        step = float(np.sum(gh.g) / np.sum(gh.h))
        f -= step
        if spec.kind == "gamma_neginv" and f >= NEGINV_F_MAX:
            raise DegenerateResponseError(
                "Newton update left the gamma::neginv link domain"
            )
        if abs(step) < _NEWTON_TOL:
            return f
    raise DegenerateResponseError(
        f"initial prediction did not converge in {_NEWTON_MAX_ITER} Newton steps"
    )


def mean_from_link(spec: LossSpec, f):
    """Inverse link: the distribution mean implied by link-scale ``f``."""
    fa = validate_link_domain(spec, f)
    kind = spec.kind
    if kind == "mse":
        out = fa.copy()
    elif kind == "logloss":
        out = special.expit(fa)
    elif kind == "gamma_neginv":
        out = -1.0 / fa
    else:
        out = np.exp(fa)
    if np.isscalar(f):
        return float(out[0])
    return out


def _require_nuisance(spec: LossSpec, nuisance, name: str) -> float:
    if nuisance is None:
        raise ConfigurationError(
            f"{spec.kind} cdf requires the nuisance parameter {name}"
        )
    if not (nuisance > 0):
        raise ConfigurationError(f"nuisance {name} must be > 0, got {nuisance!r}")
    return float(nuisance)


def cdf(spec: LossSpec, y, f, nuisance: float | None = None):
    """P(Y <= y) for the family whose mean is implied by the link at ``f``.

    ``nuisance`` supplies the non-predicted parameter where the family has
    one: Gaussian variance, gamma shape, negbinom dispersion (the latter
    defaults to the spec's dispersion).
    """
    fa = validate_link_domain(spec, f)
    ya = _as1d(y)
    ya, fa = np.broadcast_arrays(ya, fa)
    kind = spec.kind
    if kind == "mse":
        var = _require_nuisance(spec, nuisance, "variance")
        out = stats.norm.cdf(ya, loc=fa, scale=np.sqrt(var))
    elif kind == "logloss":
        p = special.expit(fa)
        out = np.where(ya < 0.0, 0.0, np.where(ya < 1.0, 1.0 - p, 1.0))
    elif kind in ("gamma_neginv", "gamma_log"):
        shape = _require_nuisance(spec, nuisance, "shape")
        mu = mean_from_link(spec, fa)
        out = stats.gamma.cdf(ya, a=shape, scale=mu / shape)
    elif kind == "poisson":
        out = stats.poisson.cdf(ya, mu=np.exp(fa))
    else:  # negbinom
        r = spec.dispersion if nuisance is None else _require_nuisance(spec, nuisance, "dispersion")
        mu = np.exp(fa)
        out = stats.nbinom.cdf(ya, n=r, p=r / (r + mu))
    if np.isscalar(y) and np.isscalar(f):
        return float(out[0])
    return out


def pmf(spec: LossSpec, y, f, nuisance: float | None = None):
    """P(Y = y) for the discrete families; used by the randomized transform."""
    if not spec.is_discrete:
        raise ConfigurationError(f"{spec.kind} is not a discrete family")
    fa = validate_link_domain(spec, f)
    ya = _as1d(y)
    ya, fa = np.broadcast_arrays(ya, fa)
    kind = spec.kind
    if kind == "logloss":
        p = special.expit(fa)
        out = np.where(ya == 0.0, 1.0 - p, np.where(ya == 1.0, p, 0.0))
    elif kind == "poisson":
        out = stats.poisson.pmf(ya, mu=np.exp(fa))
    else:
        r = spec.dispersion if nuisance is None else float(nuisance)
        mu = np.exp(fa)
        out = stats.nbinom.pmf(ya, n=r, p=r / (r + mu))
    if np.isscalar(y) and np.isscalar(f):
        return float(out[0])
    return out
