"""Greedy profiling of binary splits within a node.

All candidate thresholds on every feature are scanned via prefix sums of
the per-observation derivatives over presorted feature columns. Thresholds
sit at midpoints between consecutive distinct values; equal values share a
single candidate, since a cut between equal values is unrealizable.

The training-loss reduction of a split is computed in the algebraically
equivalent form

    R = (G_l*H_r - G_r*H_l)^2 / (H_l*H_r*(H_l+H_r) * 2n)

whose numerator is a square, so R >= 0 holds in floating point by
construction (the naive three-term difference can go slightly negative
through cancellation). Prefix sums are accumulated in extended precision
to keep scan totals consistent with from-scratch recomputation at large n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvexityError

# Extended-precision accumulator for prefix sums; falls back to float64 on
# platforms without a wider longdouble.
_ACC_DTYPE = np.longdouble


@dataclass(frozen=True)
class NodeStats:
    """Aggregated derivatives of the observations routed to one node."""

    G: float
    H: float
    n_node: int
    n_total: int

    def __post_init__(self) -> None:
        if self.H <= 0:
            raise ConvexityError(f"node hessian sum must be > 0, got {self.H!r}")
        if self.n_node < 1 or self.n_node > self.n_total:
            raise ValueError(f"invalid node size {self.n_node} of {self.n_total}")

    @property
    def pi(self) -> float:
        """Fraction of the training data passed to this node."""
        return self.n_node / self.n_total


def node_loss(stats: NodeStats) -> float:
    """Training loss of the node under its optimal constant, -G^2/(2nH)."""
    return -(stats.G**2) / (2.0 * stats.n_total * stats.H)


def leaf_weight(stats: NodeStats) -> float:
    """Closed-form leaf weight -G/H."""
    return -stats.G / stats.H


@dataclass
class SplitDecision:
    """Best binary split of a node plus the profiling grid it was chosen from.

    ``split_quantiles`` maps feature index -> the empirical in-node rank
    fractions u_k of every candidate threshold on that feature (for all
    features with at least one candidate, not only the winner).
    """

    feature: int
    threshold: float
    left_stats: NodeStats
    right_stats: NodeStats
    reduction: float
    split_quantiles: dict[int, np.ndarray] = field(repr=False)


class PresortedMatrix:
    """Feature matrix with per-column sort orders computed once.

    Node subsets are extracted in sorted feature order with a boolean mask
    in O(n) per feature, avoiding a re-sort at every node.
    """

    def __init__(self, X: np.ndarray):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
        self.X = X
        self.n, self.m = X.shape
        self._order = [
            np.argsort(X[:, j], kind="stable") for j in range(self.m)
        ]
        self._sorted_values = [X[self._order[j], j] for j in range(self.m)]

    def node_view(self, j: int, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices of the masked rows in ascending order of feature j."""
        sel = mask[self._order[j]]
        idx = self._order[j][sel]
        return idx, self._sorted_values[j][sel]


def _reduction_scans(
    xs: np.ndarray,
    g_cum: np.ndarray,
    h_cum: np.ndarray,
    n_total: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None:
    """Candidate positions, thresholds, gains, and quantiles for one feature."""
    n = xs.size
    boundary = np.flatnonzero(xs[:-1] != xs[1:])  # split after these positions
    if boundary.size == 0:
        return None
    G_t = g_cum[-1]
    H_t = h_cum[-1]
    Gl = g_cum[boundary]
    Hl = h_cum[boundary]
    Gr = G_t - Gl
    Hr = H_t - Hl
    num = np.asarray((Gl * Hr - Gr * Hl) ** 2, dtype=np.float64)
    den = np.asarray(Hl * Hr * H_t, dtype=np.float64)
    # single float64 division (no extended-precision double rounding), so a
    # from-scratch recomputation on exactly representable sums reproduces R
    # bit for bit
    red = num / (den * (2.0 * n_total))
    lo = xs[boundary]
    hi = xs[boundary + 1]
    thr = lo + (hi - lo) * 0.5
    # Midpoints can round onto the upper value for adjacent floats; pin such
    # thresholds to the lower value so routing by x <= s reproduces the scan
    # partition exactly.
    np.copyto(thr, lo, where=thr >= hi)
    u = (boundary + 1).astype(np.float64) / n
    return boundary, thr, red, u


def best_split(
    data: PresortedMatrix,
    mask: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    n_total: int,
) -> SplitDecision | None:
    """Maximize the training-loss reduction over all features and thresholds.

    Ties break toward the lower feature index, then the lower threshold, so
    the decision is independent of scan order. Returns None when no feature
    has two distinct values in the node.
    """
    n_node = int(np.count_nonzero(mask))
    if n_node < 2:
        return None

    quantiles: dict[int, np.ndarray] = {}
    best: tuple[float, int, float] | None = None  # (R, feature, threshold)
    best_parts: tuple[NodeStats, NodeStats] | None = None

    for j in range(data.m):
        idx, xs = data.node_view(j, mask)
        g_cum = np.cumsum(g[idx], dtype=_ACC_DTYPE)
        h_cum = np.cumsum(h[idx], dtype=_ACC_DTYPE)
        scans = _reduction_scans(xs, g_cum, h_cum, n_total)
        if scans is None:
            continue
        boundary, thr, red, u = scans
        quantiles[j] = u
        k = int(np.argmax(red))  # first occurrence: lowest threshold wins
        cand = (float(red[k]), j, float(thr[k]))
        if best is None:
            better = True
        elif cand[0] != best[0]:
            better = cand[0] > best[0]
        else:
            # exact tie on R: lower feature index, then lower threshold
            better = (cand[1], cand[2]) < (best[1], best[2])
        if better:
            best = cand
            pos = boundary[k]
            left = NodeStats(
                G=float(g_cum[pos]),
                H=float(h_cum[pos]),
                n_node=int(pos + 1),
                n_total=n_total,
            )
            right = NodeStats(
                G=float(g_cum[-1] - g_cum[pos]),
                H=float(h_cum[-1] - h_cum[pos]),
                n_node=n_node - int(pos + 1),
                n_total=n_total,
            )
            best_parts = (left, right)

    if best is None:
        return None
    assert best_parts is not None
    return SplitDecision(
        feature=best[1],
        threshold=best[2],
        left_stats=best_parts[0],
        right_stats=best_parts[1],
        reduction=best[0],
        split_quantiles=quantiles,
    )
