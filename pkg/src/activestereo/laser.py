"""Simulated structured-light queries and the lattice updates they justify.

A query aims a vertical light plane at right-image column q.  Per scanline
the answer is either the disparity g observed there or the fact that the
column is occluded.  A confirmed (q, g) pins the match node at (q, g) to
cost zero and rules out every node that no monotone path through (q, g)
could visit: the interior of the two triangles cut off by the column line
i = q and the diagonal line i + j = q + g gets the blocking cost, while the
lines themselves get the milder soft cost (paths must still pass near the
confirmed point, but boundary slack stays allowed).

Earlier updates win where regions overlap: a node already blocked stays
blocked, and a node already pinned to zero by an earlier confirmation is
never raised again.  A fresh answer that is strictly inside the forbidden
interior of an earlier confirmation is a contradiction between answers; it
is reported as a conflict and must not be applied at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dsi import CostModel, Dsi, NodeId, NodeKind, apply_cost_override, has_unblocked_path
from .exceptions import DimensionError, UpdateRejectedError

OCCLUDED = -1
MISSED = -2


@dataclass(frozen=True)
class GroundTruth:
    """Reference disparities per (scanline, column); OCCLUDED marks holes."""

    disparity: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.disparity)
        if arr.ndim != 2:
            raise DimensionError(f"ground truth must be 2-d, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise DimensionError("ground truth disparities must be integers")
        arr = arr.astype(np.int32, copy=False)
        if arr.min() < OCCLUDED:
            raise ValueError("ground truth entries must be disparities or OCCLUDED")
        object.__setattr__(self, "disparity", arr)

    @property
    def num_rows(self) -> int:
        return int(self.disparity.shape[0])

    @property
    def num_columns(self) -> int:
        return int(self.disparity.shape[1])

    def check_bounds(self, num_disparities: int) -> None:
        top = int(self.disparity.max())
        if top >= num_disparities:
            raise DimensionError(
                f"ground truth disparity {top} outside the lattice range "
                f"0..{num_disparities - 1}"
            )


@dataclass(frozen=True)
class ConfirmedMatch:
    """One applied match answer: scanline row, column, disparity, aim number."""

    row: int
    col: int
    disp: int
    aim_index: int


@dataclass(frozen=True)
class ConflictEvent:
    row: int
    aim_index: int
    existing_col: int
    existing_disp: int
    new_col: int
    new_disp: int


def simulate_query(
    gt: GroundTruth,
    column: int,
    miss_probability: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Light up one column and read the per-row answers off the ground truth.

    Returns an int array of disparities with OCCLUDED where the reference
    says the column is hidden and MISSED where the detector (optionally)
    failed to see the stripe at all.
    """
    if not 0 <= column < gt.num_columns:
        raise IndexError(f"column {column} outside 0..{gt.num_columns - 1}")
    answers = gt.disparity[:, column].copy()
    if miss_probability > 0.0:
        if rng is None:
            raise ValueError("miss_probability > 0 needs an rng")
        lost = rng.random(gt.num_rows) < miss_probability
        answers[lost] = MISSED
    return answers


def conflict(
    existing: Iterable[ConfirmedMatch], new_col: int, new_disp: int
) -> ConfirmedMatch | None:
    """First earlier confirmation whose forbidden interior contains the
    new answer, or None.

    The new point (q', g') contradicts an earlier (q, g) when it lies
    strictly inside either cut-off triangle: q' > q with q'+g' < q+g, or
    q' < q with q'+g' > q+g.  Points on the boundary lines are fine; in
    particular a later answer on the same diagonal is the ordinary
    catching-up geometry, not a contradiction.
    """
    for prior in existing:
        right_of = new_col > prior.col and new_col + new_disp < prior.col + prior.disp
        left_of = new_col < prior.col and new_col + new_disp > prior.col + prior.disp
        if right_of or left_of:
            return prior
    return None


def _region_writes(
    num_columns: int, num_disparities: int, col: int, disp: int, model: CostModel
) -> list[tuple[NodeId, float]]:
    """All (node, cost) writes for confirming a match at (col, disp)."""
    writes: list[tuple[NodeId, float]] = []
    diag = col + disp
    for j in range(num_disparities):
        for kind in NodeKind:
            cost = 0.0 if (j == disp and kind == NodeKind.MATCH) else model.soft_cost
            writes.append((NodeId(col, j, kind), cost))
    lo = max(0, diag - num_disparities + 1)
    hi = min(num_columns - 1, diag)
    for i in range(lo, hi + 1):
        if i == col:
            continue
        j = diag - i
        for kind in NodeKind:
            writes.append((NodeId(i, j, kind), model.soft_cost))
    # interior beyond the column, below the diagonal
    for i in range(col + 1, min(num_columns, diag)):
        for j in range(diag - i):
            for kind in NodeKind:
                writes.append((NodeId(i, j, kind), model.block_cost))
    # interior before the column, above the diagonal
    for i in range(max(0, diag - num_disparities + 2), col):
        for j in range(diag - i + 1, num_disparities):
            for kind in NodeKind:
                writes.append((NodeId(i, j, kind), model.block_cost))
    return writes


_ABSENT = object()


def _apply_guarded(
    dsi: Dsi, writes: Sequence[tuple[NodeId, float]], model: CostModel
) -> None:
    """Write overrides with precedence guards, rolling back if the lattice
    would lose its last open path."""
    undo: list[tuple[NodeId, object]] = []
    for node, cost in writes:
        current = dsi.overrides.get(node)
        if current is not None:
            if current >= model.block_cost:
                continue  # blocks are permanent
            if current == 0.0 and cost > 0.0:
                continue  # confirmed matches stay pinned
        undo.append((node, dsi.overrides.get(node, _ABSENT)))
        apply_cost_override(dsi, node, cost)
    if not has_unblocked_path(dsi, model):
        for node, previous in reversed(undo):
            if previous is _ABSENT:
                del dsi.overrides[node]
            else:
                dsi.overrides[node] = previous
        raise UpdateRejectedError(
            "update would block every remaining entry-to-exit path"
        )


def apply_match_update(dsi: Dsi, col: int, disp: int, model: CostModel) -> Dsi:
    """Fold a confirmed match at (col, disp) into the lattice costs.

    Callers are expected to run :func:`conflict` first; this function only
    guards against an update that would disconnect the lattice outright, and
    rolls everything back in that case.
    """
    n, d = dsi.num_columns, dsi.num_disparities
    if not (0 <= col < n and 0 <= disp < d):
        raise IndexError(f"confirmed match ({col}, {disp}) outside the lattice")
    _apply_guarded(dsi, _region_writes(n, d, col, disp, model), model)
    return dsi


def apply_occlusion_update(dsi: Dsi, col: int, model: CostModel) -> Dsi:
    """Fold an occluded-column answer in: no match node at col can be used.

    Occlusion nodes at the column stay untouched, so paths may still cross
    it, just not via a match.  Rolls back and raises if even that removes
    the last open path (d = 1 lattices, for instance).
    """
    if not 0 <= col < dsi.num_columns:
        raise IndexError(f"column {col} outside the lattice")
    writes = [
        (NodeId(col, j, NodeKind.MATCH), model.block_cost)
        for j in range(dsi.num_disparities)
    ]
    undo = [(node, dsi.overrides.get(node, _ABSENT)) for node, _ in writes]
    for node, cost in writes:
        apply_cost_override(dsi, node, cost)
    if not has_unblocked_path(dsi, model):
        for node, previous in reversed(undo):
            if previous is _ABSENT:
                del dsi.overrides[node]
            else:
                dsi.overrides[node] = previous
        raise UpdateRejectedError(
            f"blocking all matches at column {col} would disconnect the lattice"
        )
    return dsi
