"""Optimism of greedily profiled loss reductions.

Profiling the best split over every candidate threshold inflates the
apparent gain. Asymptotically, the profiled gain statistic behaves like
the running maximum of a Cox-Ingersoll-Ross process

    dS = 2(1 - S) dt + 2*sqrt(2 S) dW

observed at times tau_k = 0.5*log(u_k(1-eps)/(eps(1-u_k))) mapped from
the candidate rank fractions u_k, with stationary law Gamma(1/2, 2)
(i.e. chi-square with one degree of freedom, mean 1, variance 2).

The expected maximum E[max over features and candidates] is estimated by
Monte Carlo with exact CIR transitions: the conditional law of S(t+dt)
given S(t)=s is c * noncentral-chi-square(d=1, lambda=s*exp(-2 dt)/c)
with c = 1 - exp(-2 dt). With one degree of freedom the draw reduces to
(sqrt(c) Z + sqrt(s * exp(-2 dt)))^2 for Z ~ N(0,1), which is sampled
directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvexityError

_Z_BLOCK = 128  # steps of normals drawn per batch in the path loop


@dataclass(frozen=True)
class CirParams:
    """Fixed process constants: 2*kappa*theta/sigma^2 = 1/2, mean 1, variance 2."""

    kappa: float = 2.0
    theta: float = 1.0
    sigma: float = 2.0 * np.sqrt(2.0)
    epsilon: float = 1e-7


CIR = CirParams()


@dataclass(frozen=True)
class OptimismEstimate:
    """Composed optimism of one profiled split: c_r = -c_root * pi * e_max.

    ``c_root`` is the node-conditional sandwich optimism (per in-node
    observation); multiplying by the node probability ``pi`` puts it on the
    same 1/n_total scale as the training-loss reduction it penalizes.
    """

    c_root: float
    e_max: float
    c_r: float


def root_optimism(g: np.ndarray, h: np.ndarray, w_hat: float, n_total: int) -> float:
    """Plug-in sandwich optimism of a node's fitted constant, on the 1/n_total scale.

    Empirical Hessian times plug-in parameter covariance:
    sum((g_i + h_i*w)^2) / (n_total * H).
    """
    H = float(np.sum(h))
    if H <= 0:
        raise ConvexityError(f"node hessian sum must be > 0, got {H!r}")
    scores = g + h * w_hat
    return float(np.sum(scores**2)) / (n_total * H)


def tau_from_quantile(u) -> np.ndarray:
    """Observation times for the CIR process, clamped to u in [eps, 1-eps]."""
    eps = CIR.epsilon
    uc = np.clip(np.asarray(u, dtype=np.float64), eps, 1.0 - eps)
    return 0.5 * np.log(uc * (1.0 - eps) / (eps * (1.0 - uc)))


def cir_step_exact(s, dt: float, rng: np.random.Generator):
    """Exact transition of the CIR process over a step of length dt > 0.

    Accepts a scalar or array state; returns the same shape. Output >= 0.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    sa = np.asarray(s, dtype=np.float64)
    decay = np.exp(-2.0 * dt)
    c = -np.expm1(-2.0 * dt)  # 1 - exp(-2 dt), accurate for tiny dt
    z = rng.standard_normal(sa.shape)
    out = (np.sqrt(c) * z + np.sqrt(sa * decay)) ** 2
    if np.isscalar(s):
        return float(out)
    return out


def _max_over_paths(
    tau: np.ndarray, n_feat: int, n_sim: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-replicate running max of n_feat independent CIR paths on grid tau."""
    s = rng.standard_normal((n_sim, n_feat))
    np.square(s, out=s)  # stationary draw: chi-square(1)
    m = s.copy()
    dts = np.diff(tau)
    pos = 0
    while pos < dts.size:
        block = dts[pos : pos + _Z_BLOCK]
        z = rng.standard_normal((block.size, n_sim, n_feat))
        for i, dt in enumerate(block):
            decay = np.exp(-2.0 * dt)
            c = -np.expm1(-2.0 * dt)
            s = (np.sqrt(c) * z[i] + np.sqrt(s * decay)) ** 2
            np.maximum(m, s, out=m)
        pos += block.size
    return m.max(axis=1)


def expected_max_cir(
    split_quantiles: dict[int, np.ndarray] | list[np.ndarray],
    n_sim: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo estimate of E[max over features and candidates of S(tau_k)].

    Each feature contributes an independent path started from the stationary
    law and advanced through its sorted observation times; duplicate
    quantiles are collapsed since they add no new maximum.
    """
    if hasattr(split_quantiles, "values"):
        grids = [np.asarray(q) for _, q in sorted(split_quantiles.items())]
    else:
        grids = [np.asarray(q) for q in split_quantiles]
    if len(grids) == 0 or any(q.size == 0 for q in grids):
        raise ConfigurationError("every feature must contribute at least one quantile")
    if n_sim < 1:
        raise ConfigurationError(f"n_sim must be >= 1, got {n_sim}")

    taus = [np.unique(tau_from_quantile(q)) for q in grids]
    # Features sharing a grid ride one batched simulation; grouping keyed by
    # grid content keeps the draw count at one path per feature either way.
    groups: dict[bytes, tuple[np.ndarray, int]] = {}
    for t in taus:
        key = t.tobytes()
        if key in groups:
            groups[key] = (t, groups[key][1] + 1)
        else:
            groups[key] = (t, 1)

    overall = np.full(n_sim, -np.inf)
    for t, count in groups.values():
        np.maximum(overall, _max_over_paths(t, count, n_sim, rng), out=overall)
    return float(np.mean(overall))


def loss_reduction_optimism(c_root: float, pi: float, e_max: float) -> float:
    """Optimism of a profiled loss reduction: -c_root * pi * e_max (<= 0).

    ``c_root`` is the node-conditional optimism of the parent's fitted
    constant (scale 1/n_node); the product is on the 1/n_total scale.
    """
    return -c_root * pi * e_max


class ExpectedMaxCache:
    """Per-training-run memo for expected-max estimates.

    Rank-based quantile grids coincide across nodes of equal size whenever
    feature values are tie-free, so keying on exact grid content (order
    insensitive, since the max over features is exchangeable) makes repeated
    node shapes cost one simulation per training run.
    """

    def __init__(self, n_sim: int, rng: np.random.Generator):
        self.n_sim = n_sim
        self.rng = rng
        self._memo: dict[tuple[bytes, ...], float] = {}

    def expected_max(self, split_quantiles: dict[int, np.ndarray]) -> float:
        grids = [np.asarray(q, dtype=np.float64) for _, q in sorted(split_quantiles.items())]
        key = tuple(sorted(q.tobytes() for q in grids))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = expected_max_cir(grids, self.n_sim, self.rng)
        self._memo[key] = value
        return value
