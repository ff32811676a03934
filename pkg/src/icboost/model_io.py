"""Versioned plain-text model persistence.

Floats are written with Python's shortest round-trip representation, so a
loaded model predicts bit-identically to the one saved. Trees are stored
as preorder node records: internal nodes keep their split gain and
optimism (the importance report needs them), leaves keep their weight and
training-time statistics.

Format (version 1)::

    icboost model 1
    loss <cli name>
    dispersion <r>          # negbinom only
    delta <float>
    f0 <float>
    mode <vanilla|global_subset>
    seed <int>
    iterations <int>
    n_features <int>
    n_trees <int>
    tree <node count>
    s <feature> <threshold> <reduction> <optimism>
    l <weight> <n_node> <loss> <optimism>
    ...
    end
"""

from __future__ import annotations

from pathlib import Path

from .ensemble import EnsembleModel
from .errors import ModelFormatError
from .losses import LossSpec
from .tree import LeafNode, SplitNode, Tree, TreeNode

FORMAT_VERSION = 1
_MAGIC = "icboost model"


def _write_node(node: TreeNode, out: list[str]) -> None:
    if isinstance(node, SplitNode):
        out.append(
            f"s {node.feature} {node.threshold!r} {node.reduction!r} {node.optimism!r}"
        )
        _write_node(node.left, out)
        _write_node(node.right, out)
    else:
        out.append(f"l {node.weight!r} {node.n_node} {node.loss!r} {node.optimism!r}")


def _count_nodes(node: TreeNode) -> int:
    if isinstance(node, SplitNode):
        return 1 + _count_nodes(node.left) + _count_nodes(node.right)
    return 1


def dumps(model: EnsembleModel) -> str:
    lines = [f"{_MAGIC} {FORMAT_VERSION}", f"loss {model.loss.cli_name}"]
    if model.loss.dispersion is not None:
        lines.append(f"dispersion {model.loss.dispersion!r}")
    lines += [
        f"delta {model.delta!r}",
        f"f0 {model.f0!r}",
        f"mode {model.mode}",
        f"seed {model.seed}",
        f"iterations {len(model.trees)}",
        f"n_features {model.n_features}",
        f"n_trees {len(model.trees)}",
    ]
    for tree in model.trees:
        lines.append(f"tree {_count_nodes(tree.root)}")
        _write_node(tree.root, lines)
        lines.append("end")
    return "\n".join(lines) + "\n"


def save(model: EnsembleModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError("unexpected end of model file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_key(self, key: str) -> list[str]:
        line = self.next()
        parts = line.split()
        if not parts or parts[0] != key:
            raise ModelFormatError(f"expected '{key} ...' at line {self.pos}, got {line!r}")
        return parts[1:]


def _read_node(reader: _Reader, n_features: int) -> TreeNode:
    parts = reader.next().split()
    if parts[0] == "s" and len(parts) == 5:
        feature = int(parts[1])
        if not 0 <= feature < n_features:
            raise ModelFormatError(f"split feature {feature} out of range")
        left = _read_node(reader, n_features)
        right = _read_node(reader, n_features)
        return SplitNode(
            feature=feature,
            threshold=float(parts[2]),
            reduction=float(parts[3]),
            optimism=float(parts[4]),
            left=left,
            right=right,
        )
    if parts[0] == "l" and len(parts) == 5:
        return LeafNode(
            weight=float(parts[1]),
            n_node=int(parts[2]),
            loss=float(parts[3]),
            optimism=float(parts[4]),
        )
    raise ModelFormatError(f"bad node record at line {reader.pos}: {' '.join(parts)!r}")


def loads(text: str) -> EnsembleModel:
    reader = _Reader(text)
    header = reader.next().rsplit(" ", 1)
    if len(header) != 2 or header[0] != _MAGIC:
        raise ModelFormatError("not an icboost model file")
    if header[1] != str(FORMAT_VERSION):
        raise ModelFormatError(
            f"unsupported model format version {header[1]!r} (supported: {FORMAT_VERSION})"
        )
    loss_name = reader.expect_key("loss")[0]
    dispersion = None
    if reader.pos < len(reader.lines) and reader.lines[reader.pos].startswith("dispersion "):
        dispersion = float(reader.expect_key("dispersion")[0])
    spec = LossSpec.from_cli_name(loss_name, dispersion)
    delta = float(reader.expect_key("delta")[0])
    f0 = float(reader.expect_key("f0")[0])
    mode = reader.expect_key("mode")[0]
    seed = int(reader.expect_key("seed")[0])
    reader.expect_key("iterations")
    n_features = int(reader.expect_key("n_features")[0])
    n_trees = int(reader.expect_key("n_trees")[0])
    trees = []
    for _ in range(n_trees):
        n_nodes = int(reader.expect_key("tree")[0])
        root = _read_node(reader, n_features)
        if _count_nodes(root) != n_nodes:
            raise ModelFormatError(
                f"tree declared {n_nodes} nodes but {_count_nodes(root)} were read"
            )
        if reader.next() != "end":
            raise ModelFormatError(f"missing 'end' after tree at line {reader.pos}")
        trees.append(Tree(root=root, profile=None, n_features=n_features))
    while reader.pos < len(reader.lines):
        if reader.lines[reader.pos].strip():
            raise ModelFormatError(f"trailing content at line {reader.pos + 1}")
        reader.pos += 1
    return EnsembleModel(
        loss=spec,
        f0=f0,
        delta=delta,
        trees=trees,
        n_features=n_features,
        mode=mode,
        seed=seed,
    )


def load(path) -> EnsembleModel:
    return loads(Path(path).read_text(encoding="utf-8"))
