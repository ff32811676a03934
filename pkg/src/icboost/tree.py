"""Single boosting tree: gated recursive splitting and prediction.

The root split is always performed when any candidate exists, because the
gradient sum over the full training set is zero at the current model and a
root-only tree would add nothing. Every deeper candidate split of a node t
must pass its gate:

    vanilla:        R_t + C_t > 0
    global_subset:  (R_t + C_t) / pi_t > max(0, R_1 + C_1)

where C_t is the loss-reduction optimism of the profiled split and
(R_1, C_1) is the root profile of the current tree, standing in for the
next iteration's root split (the two coincide as the learning rate goes
to zero). Routing sends x_j <= threshold to the left child.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .criterion import ExpectedMaxCache, loss_reduction_optimism, root_optimism
from .errors import DataError
from .splitting import PresortedMatrix, SplitDecision, best_split, node_loss

MAX_DEPTH = 32  # safety cap only; the criterion is meant to stop growth first

MODES = ("vanilla", "global_subset")


@dataclass
class LeafNode:
    weight: float
    n_node: int
    loss: float  # node training-loss contribution, 1/n_total scale
    optimism: float  # node sandwich optimism, 1/n_total scale


@dataclass
class SplitNode:
    feature: int
    threshold: float
    reduction: float  # training-loss reduction R of this performed split
    optimism: float  # loss-reduction optimism (<= 0) of this performed split
    left: "TreeNode"
    right: "TreeNode"


TreeNode = LeafNode | SplitNode


@dataclass(frozen=True)
class RootGainProfile:
    """Gain and optimism of the forced root split."""

    r1: float
    c1: float


@dataclass
class Tree:
    root: TreeNode
    profile: RootGainProfile | None
    n_features: int
    degenerate: bool = False

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self._walk() if isinstance(node, LeafNode))

    @property
    def total_reduction(self) -> float:
        return sum(n.reduction for n in self._walk() if isinstance(n, SplitNode))

    @property
    def total_optimism(self) -> float:
        return sum(n.optimism for n in self._walk() if isinstance(n, SplitNode))

    def _walk(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, SplitNode):
                stack.append(node.right)
                stack.append(node.left)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf weight reached by each row; vectorized routing."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"expected {self.n_features} features, got "
                f"{X.shape[1] if X.ndim == 2 else X.shape}"
            )
        out = np.empty(X.shape[0])
        stack: list[tuple[TreeNode, np.ndarray]] = [
            (self.root, np.arange(X.shape[0]))
        ]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, LeafNode):
                out[idx] = node.weight
                continue
            go_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
        return out


def predict_tree(tree: Tree, row) -> float:
    """Route one feature row to its leaf and return the leaf weight."""
    row = np.asarray(row, dtype=np.float64).ravel()
    if row.size != tree.n_features:
        raise DataError(f"expected {tree.n_features} features, got {row.size}")
    node = tree.root
    while isinstance(node, SplitNode):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.weight


class _Builder:
    def __init__(
        self,
        data: PresortedMatrix,
        g: np.ndarray,
        h: np.ndarray,
        mode: str,
        emax: ExpectedMaxCache,
        max_depth: int,
    ):
        self.data = data
        self.g = g
        self.h = h
        self.mode = mode
        self.emax = emax
        self.max_depth = max_depth
        self.n_total = data.n
        self.train_pred = np.empty(data.n)
        self.root_gate = 0.0  # max{0, R_1 + C_1}, set after the root split
        self.depth_capped = False

    def leaf(self, mask: np.ndarray) -> LeafNode:
        idx = np.flatnonzero(mask)
        g_node = self.g[idx]
        h_node = self.h[idx]
        G = float(np.sum(g_node))
        H = float(np.sum(h_node))
        w = -G / H
        self.train_pred[idx] = w
        return LeafNode(
            weight=w,
            n_node=idx.size,
            loss=-(G**2) / (2.0 * self.n_total * H),
            optimism=root_optimism(g_node, h_node, w, self.n_total),
        )

    def split_optimism(self, mask: np.ndarray, decision: SplitDecision) -> float:
        idx = np.flatnonzero(mask)
        g_node = self.g[idx]
        h_node = self.h[idx]
        n_node = idx.size
        w = -float(np.sum(g_node)) / float(np.sum(h_node))
        c_root = root_optimism(g_node, h_node, w, n_node)  # node-conditional
        e_max = self.emax.expected_max(decision.split_quantiles)
        return loss_reduction_optimism(c_root, n_node / self.n_total, e_max)

    def grow(self, mask: np.ndarray, depth: int, forced: bool) -> TreeNode:
        decision = best_split(self.data, mask, self.g, self.h, self.n_total)
        if decision is None:
            return self.leaf(mask)
        c_r = self.split_optimism(mask, decision)
        if not forced:
            gain = decision.reduction + c_r
            if self.mode == "vanilla":
                accept = gain > 0.0
            else:
                pi = float(np.count_nonzero(mask)) / self.n_total
                accept = gain / pi > self.root_gate
            if not accept:
                return self.leaf(mask)
            if depth >= self.max_depth:
                self.depth_capped = True
                return self.leaf(mask)
        else:
            self.root_gate = max(0.0, decision.reduction + c_r)
            self._profile = RootGainProfile(r1=decision.reduction, c1=c_r)
        left_mask = mask & (self.data.X[:, decision.feature] <= decision.threshold)
        right_mask = mask & ~left_mask
        return SplitNode(
            feature=decision.feature,
            threshold=decision.threshold,
            reduction=decision.reduction,
            optimism=c_r,
            left=self.grow(left_mask, depth + 1, False),
            right=self.grow(right_mask, depth + 1, False),
        )


def build_tree(
    data: PresortedMatrix,
    g: np.ndarray,
    h: np.ndarray,
    mode: str,
    emax: ExpectedMaxCache,
    max_depth: int = MAX_DEPTH,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree; returns it with the per-training-row leaf weights.

    A dataset with no candidate split anywhere yields a single-leaf tree
    flagged degenerate (not an error).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if data.n < 2:
        raise ValueError("tree building needs at least 2 rows")
    builder = _Builder(data, g, h, mode, emax, max_depth)
    all_rows = np.ones(data.n, dtype=bool)
    root = builder.grow(all_rows, 0, forced=True)
    if isinstance(root, LeafNode):
        tree = Tree(root=root, profile=None, n_features=data.m, degenerate=True)
    else:
        tree = Tree(root=root, profile=builder._profile, n_features=data.m)
    if builder.depth_capped:
        warnings.warn(
            f"tree growth hit the depth cap of {max_depth}; the stopping "
            "criterion alone should normally bound depth",
            RuntimeWarning,
            stacklevel=2,
        )
    return tree, builder.train_pred
