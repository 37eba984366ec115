"""Disparity space image: node layout, costs, and lattice topology.

The lattice for one scanline pair has n columns (one per right-image pixel),
d disparity levels, and three node kinds per (column, disparity) cell: a
match node plus left- and right-occlusion nodes.  A surface profile is a
path from an entry node of column 0 to any node of column n-1, stepping
along the arcs returned by :func:`successors`.

Costs live on nodes.  A match node costs the dissimilarity of the pixel
pair it identifies; occlusion nodes cost a flat penalty.  Query feedback is
layered on top as per-node overrides, which is what the laser update code
writes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, NamedTuple

import numpy as np

from .exceptions import DimensionError
from . import _kernels


class NodeKind(IntEnum):
    """Node kinds, ordered the way ties are broken."""

    MATCH = 0
    LEFT_OCC = 1
    RIGHT_OCC = 2


class NodeId(NamedTuple):
    col: int
    disp: int
    kind: NodeKind


@dataclass(frozen=True)
class CostModel:
    """Scalar knobs shared by every lattice built in one run.

    score_scale is the exponent multiplier turning costs into potentials
    (potential = exp(-score_scale * cost)); block_cost marks a node as
    unusable and soft_cost is the milder discourage-but-allow level written
    on query boundaries.  soft_cost defaults to 15x the larger occlusion
    penalty, deep enough into the tail that a softened node cannot win.
    """

    left_occ_penalty: float = 25.0
    right_occ_penalty: float = 25.0
    score_scale: float = 0.1
    score_kind: str = "abs"
    block_cost: float = 1.0e9
    soft_cost: float | None = None

    def __post_init__(self) -> None:
        if self.soft_cost is None:
            object.__setattr__(
                self, "soft_cost", 15.0 * max(self.left_occ_penalty, self.right_occ_penalty)
            )
        if not self.score_scale > 0.0:
            raise ValueError(f"score_scale must be positive, got {self.score_scale}")
        if self.left_occ_penalty < 0.0 or self.right_occ_penalty < 0.0:
            raise ValueError("occlusion penalties must be nonnegative")
        if self.score_kind not in ("abs", "squared"):
            raise ValueError(f"unknown score_kind {self.score_kind!r}")
        if not 0.0 < self.soft_cost < self.block_cost:
            raise ValueError(
                f"need 0 < soft_cost < block_cost, got {self.soft_cost} vs {self.block_cost}"
            )

    def pixel_score(self, left_value: np.ndarray, right_value: np.ndarray) -> np.ndarray:
        diff = np.abs(np.asarray(left_value, dtype=np.float64) - right_value)
        if self.score_kind == "squared":
            return diff * diff
        return diff


@dataclass(frozen=True)
class ScanlinePair:
    """One rectified scanline pair.

    The left line must be at least as long as the right one; the overhang
    plus one sets the number of disparity levels, so matches for right
    pixel i are taken from left pixels i..i+d-1.
    """

    right: np.ndarray
    left: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "right", np.asarray(self.right, dtype=np.float64).ravel())
        object.__setattr__(self, "left", np.asarray(self.left, dtype=np.float64).ravel())
        if self.right.size == 0:
            raise DimensionError("right scanline is empty")
        if self.left.size < self.right.size:
            raise DimensionError(
                f"left scanline ({self.left.size} px) shorter than right ({self.right.size} px)"
            )

    @property
    def num_columns(self) -> int:
        return int(self.right.size)

    @property
    def num_disparities(self) -> int:
        return int(self.left.size - self.right.size + 1)


@dataclass
class Dsi:
    """Match scores for one scanline plus any per-node cost overrides.

    scores[i, j] is the dissimilarity for right pixel i at disparity j.
    overrides maps NodeId -> cost and takes precedence over the base cost
    of that node (last write wins).  Mutating methods require exclusive
    access; independent scanlines are independent objects.
    """

    num_columns: int
    num_disparities: int
    scores: np.ndarray
    overrides: dict[NodeId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if self.scores.shape != (self.num_columns, self.num_disparities):
            raise DimensionError(
                f"scores shape {self.scores.shape} does not match "
                f"({self.num_columns}, {self.num_disparities})"
            )

    def nodes(self) -> Iterator[NodeId]:
        for i in range(self.num_columns):
            for j in range(self.num_disparities):
                for kind in NodeKind:
                    yield NodeId(i, j, kind)


def build_dsi(pair: ScanlinePair, model: CostModel) -> Dsi:
    """Score every (column, disparity) pixel pairing of one scanline."""
    n = pair.num_columns
    d = pair.num_disparities
    windows = np.lib.stride_tricks.sliding_window_view(pair.left, d)
    scores = model.pixel_score(windows[:n], pair.right[:, None])
    return Dsi(n, d, scores)


def dsi_from_scores(scores: np.ndarray) -> Dsi:
    """Wrap a precomputed (n, d) score array, e.g. a random test lattice."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
        raise DimensionError(f"need a 2-d score array, got shape {scores.shape}")
    return Dsi(scores.shape[0], scores.shape[1], scores)


def _check_range(dsi_or_n, d: int | None, node: NodeId) -> tuple[int, int]:
    if d is None:
        n, d = dsi_or_n.num_columns, dsi_or_n.num_disparities
    else:
        n = dsi_or_n
    i, j, kind = node
    if not (0 <= i < n and 0 <= j < d):
        raise IndexError(f"node {node} outside lattice ({n} columns, {d} disparities)")
    if kind not in (0, 1, 2):
        raise IndexError(f"node {node} has invalid kind")
    return n, d


def node_cost(dsi: Dsi, node: NodeId, model: CostModel) -> float:
    _check_range(dsi, None, node)
    try:
        return dsi.overrides[NodeId(node[0], node[1], NodeKind(node[2]))]
    except KeyError:
        pass
    i, j, kind = node
    if kind == NodeKind.MATCH:
        return float(dsi.scores[i, j])
    if kind == NodeKind.LEFT_OCC:
        return model.left_occ_penalty
    return model.right_occ_penalty


def node_potential(dsi: Dsi, node: NodeId, model: CostModel) -> float:
    return math.exp(-model.score_scale * node_cost(dsi, node, model))


def apply_cost_override(dsi: Dsi, node: NodeId, cost: float) -> Dsi:
    """Pin a node's cost, replacing any earlier override on that node."""
    _check_range(dsi, None, node)
    cost = float(cost)
    if not cost >= 0.0 or math.isnan(cost):
        raise ValueError(f"override cost must be finite and >= 0, got {cost}")
    dsi.overrides[NodeId(node[0], node[1], NodeKind(node[2]))] = cost
    return dsi


def effective_costs(dsi: Dsi, model: CostModel, out: np.ndarray | None = None) -> np.ndarray:
    """Materialize base costs plus overrides as an (n, d, 3) float array."""
    n, d = dsi.num_columns, dsi.num_disparities
    costs = np.empty((n, d, 3)) if out is None else out
    costs[:, :, NodeKind.MATCH] = dsi.scores
    costs[:, :, NodeKind.LEFT_OCC] = model.left_occ_penalty
    costs[:, :, NodeKind.RIGHT_OCC] = model.right_occ_penalty
    for (i, j, kind), cost in dsi.overrides.items():
        costs[i, j, kind] = cost
    return costs


def predecessors(node: NodeId, num_columns: int, num_disparities: int) -> set[NodeId]:
    """In-neighbours of a node; empty for entry-like boundary nodes."""
    _check_range(num_columns, num_disparities, node)
    i, j, kind = node
    out: set[NodeId] = set()
    if kind == NodeKind.MATCH:
        if i > 0:
            out.add(NodeId(i - 1, j, NodeKind.MATCH))
            out.add(NodeId(i - 1, j, NodeKind.LEFT_OCC))
            out.add(NodeId(i - 1, j, NodeKind.RIGHT_OCC))
    elif kind == NodeKind.RIGHT_OCC:
        if i > 0 and j > 0:
            out.add(NodeId(i - 1, j - 1, NodeKind.MATCH))
            out.add(NodeId(i - 1, j - 1, NodeKind.RIGHT_OCC))
    else:
        if j + 1 < num_disparities:
            out.add(NodeId(i, j + 1, NodeKind.MATCH))
            out.add(NodeId(i, j + 1, NodeKind.LEFT_OCC))
    return out


def successors(node: NodeId, num_columns: int, num_disparities: int) -> set[NodeId]:
    """Out-neighbours of a node; the exact dual of :func:`predecessors`."""
    _check_range(num_columns, num_disparities, node)
    i, j, kind = node
    out: set[NodeId] = set()
    if kind == NodeKind.MATCH:
        if i + 1 < num_columns:
            out.add(NodeId(i + 1, j, NodeKind.MATCH))
            if j + 1 < num_disparities:
                out.add(NodeId(i + 1, j + 1, NodeKind.RIGHT_OCC))
        if j > 0:
            out.add(NodeId(i, j - 1, NodeKind.LEFT_OCC))
    elif kind == NodeKind.RIGHT_OCC:
        if i + 1 < num_columns:
            out.add(NodeId(i + 1, j, NodeKind.MATCH))
            if j + 1 < num_disparities:
                out.add(NodeId(i + 1, j + 1, NodeKind.RIGHT_OCC))
    else:
        if i + 1 < num_columns:
            out.add(NodeId(i + 1, j, NodeKind.MATCH))
        if j > 0:
            out.add(NodeId(i, j - 1, NodeKind.LEFT_OCC))
    return out


def entry_nodes(dsi: Dsi) -> set[NodeId]:
    """Match and right-occlusion nodes of column 0."""
    return {
        NodeId(0, j, kind)
        for j in range(dsi.num_disparities)
        for kind in (NodeKind.MATCH, NodeKind.RIGHT_OCC)
    }


def exit_nodes(dsi: Dsi) -> set[NodeId]:
    """Every node of the last column."""
    i = dsi.num_columns - 1
    return {
        NodeId(i, j, kind) for j in range(dsi.num_disparities) for kind in NodeKind
    }


def has_unblocked_path(dsi: Dsi, model: CostModel) -> bool:
    """True iff some entry-to-exit path avoids every blocked node."""
    costs = effective_costs(dsi, model)
    return bool(_kernels.has_open_path(costs, model.block_cost))
