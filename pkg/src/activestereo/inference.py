"""Exact inference over one scanline lattice in O(n*d).

Three passes over the same lattice:

* :func:`viterbi` - min-cost path with deterministic tie-breaking.
* :func:`forward` / :func:`backward` - scaled sum-product sweeps that carry
  (mass, mass*log-mass) pairs, so path entropy and per-node entropy come out
  of the same recursion that computes the partition mass.
* :func:`column_marginals` - posterior over each column's match /
  right-occlusion state from the two sweeps.

Scaling: each column of a sweep is divided by its largest entry and the log
of the running product is kept per column.  The log-mass accumulator is
rescaled alongside via a -> (a - w*log(alpha)) / alpha, which keeps it the
accumulator of the rescaled weights.  Blocked nodes have potential exactly
0.0; keeping log-potentials as -scale*cost (never log of the potential)
means 0 * logpot stays finite and no NaNs leak in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dsi import CostModel, Dsi, NodeId, NodeKind, effective_costs
from .exceptions import InfeasibleLatticeError


@dataclass
class ForwardTables:
    """Prefix mass per node, scaled per column.

    mass[i,j,k] * exp(log_scale[i]) is the true summed weight of all partial
    paths from an entry through that node, own potential included.  acc is
    the matching sum of weight*log(weight) in the same scaled frame.
    """

    mass: np.ndarray
    acc: np.ndarray
    log_scale: np.ndarray


@dataclass
class BackwardTables:
    """Suffix mass per node, scaled per column, own potential excluded.

    Excluding the node's own potential keeps the tables finite on blocked
    nodes and makes forward*backward single-count every potential, so no
    division is ever needed when combining the sweeps.
    """

    mass: np.ndarray
    acc: np.ndarray
    log_scale: np.ndarray


@dataclass
class PosteriorMarginals:
    """Per-column posterior over the disparity/occlusion state.

    match[i, j] = P(path crosses column i at the match node with disparity j)
    occlusion[i, j] = same for the right-occlusion node.  Rows sum to 1.
    left_occ[i, j] = P(path visits the left-occlusion node), a diagnostic
    that does not take part in the row normalization.
    """

    match: np.ndarray
    occlusion: np.ndarray
    left_occ: np.ndarray


@dataclass
class PathStats:
    """log of the total path mass and the path-distribution entropy (nats)."""

    log_mass: float
    entropy: float


@dataclass
class ViterbiResult:
    nodes: np.ndarray  # (L, 3) int64 rows of (column, disparity, kind)
    cost: float

    @property
    def path(self) -> list[NodeId]:
        return [NodeId(int(i), int(j), NodeKind(int(k))) for i, j, k in self.nodes]

    def disparity_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column disparity plus an occlusion flag.

        Every path crosses each column at exactly one match or
        right-occlusion node; that node's disparity is reported and the
        occlusion flag is set when it is the occlusion node.
        """
        if self.nodes.shape[0] == 0:
            raise InfeasibleLatticeError("no unblocked path to read a profile from")
        num_columns = int(self.nodes[-1, 0]) + 1
        disp = np.zeros(num_columns, dtype=np.int32)
        occluded = np.zeros(num_columns, dtype=bool)
        for i, j, kind in self.nodes:
            if kind != NodeKind.LEFT_OCC:
                disp[i] = j
                occluded[i] = kind == NodeKind.RIGHT_OCC
        return disp, occluded


class Workspace:
    """Reusable scratch tables for the sweep and Viterbi kernels.

    Allocating the (n, d, 3) tables per scanline costs more in page faults
    than the sweeps themselves once lattices reach a few megabytes, so
    callers that process many rows create one workspace per thread and pass
    it to :func:`sweeps` / :func:`viterbi`.  Tables returned from a call
    that was given a workspace alias its arrays and are overwritten by the
    next call that reuses it; pull out anything that must survive first.
    """

    __slots__ = (
        "num_columns",
        "num_disparities",
        "costs",
        "pot",
        "logpot",
        "f_mass",
        "f_acc",
        "f_scale",
        "b_mass",
        "b_acc",
        "b_scale",
        "v_score",
        "v_back",
    )

    def __init__(self) -> None:
        self.num_columns = -1
        self.num_disparities = -1

    def reserve(self, num_columns: int, num_disparities: int) -> None:
        if (num_columns, num_disparities) == (self.num_columns, self.num_disparities):
            return
        shape = (num_columns, num_disparities, 3)
        self.costs = np.empty(shape)
        self.pot = np.empty(shape)
        self.logpot = np.empty(shape)
        self.f_mass = np.empty(shape)
        self.f_acc = np.empty(shape)
        self.f_scale = np.empty(num_columns)
        self.b_mass = np.empty(shape)
        self.b_acc = np.empty(shape)
        self.b_scale = np.empty(num_columns)
        # Viterbi scratch is allocated on first use; sweep-only callers
        # (the benchmark in particular) never touch it.
        self.v_score = None
        self.v_back = None
        self.num_columns = num_columns
        self.num_disparities = num_disparities

    def _viterbi_scratch(self) -> tuple[np.ndarray, np.ndarray]:
        if self.v_score is None:
            shape = (self.num_columns, self.num_disparities, 3)
            self.v_score = np.empty(shape)
            self.v_back = np.empty(shape, np.int8)
        return self.v_score, self.v_back


def _materialize(dsi: Dsi, model: CostModel, ws: Workspace) -> None:
    ws.reserve(dsi.num_columns, dsi.num_disparities)
    effective_costs(dsi, model, out=ws.costs)
    np.multiply(ws.costs, -model.score_scale, out=ws.logpot)
    np.exp(ws.logpot, out=ws.pot)


def forward(dsi: Dsi, model: CostModel, workspace: Workspace | None = None) -> ForwardTables:
    ws = workspace if workspace is not None else Workspace()
    _materialize(dsi, model, ws)
    bad = _kernels.forward_pass(ws.pot, ws.logpot, ws.f_mass, ws.f_acc, ws.f_scale)
    if bad >= 0:
        raise InfeasibleLatticeError(
            f"forward mass vanished at column {bad}; every path is blocked there"
        )
    return ForwardTables(ws.f_mass, ws.f_acc, ws.f_scale)


def backward(dsi: Dsi, model: CostModel, workspace: Workspace | None = None) -> BackwardTables:
    ws = workspace if workspace is not None else Workspace()
    _materialize(dsi, model, ws)
    bad = _kernels.backward_pass(ws.pot, ws.logpot, ws.b_mass, ws.b_acc, ws.b_scale)
    if bad >= 0:
        raise InfeasibleLatticeError(
            f"backward mass vanished at column {bad}; every path is blocked there"
        )
    return BackwardTables(ws.b_mass, ws.b_acc, ws.b_scale)


def sweeps(
    dsi: Dsi, model: CostModel, workspace: Workspace | None = None
) -> tuple[ForwardTables, BackwardTables]:
    """Both sweeps off one shared potential materialization.

    Same results as calling :func:`forward` and :func:`backward`; building
    the potential arrays once just halves the setup traffic, which matters
    when a session re-infers thousands of rows.
    """
    ws = workspace if workspace is not None else Workspace()
    _materialize(dsi, model, ws)
    bad = _kernels.forward_pass(ws.pot, ws.logpot, ws.f_mass, ws.f_acc, ws.f_scale)
    if bad >= 0:
        raise InfeasibleLatticeError(
            f"forward mass vanished at column {bad}; every path is blocked there"
        )
    bad = _kernels.backward_pass(ws.pot, ws.logpot, ws.b_mass, ws.b_acc, ws.b_scale)
    if bad >= 0:
        raise InfeasibleLatticeError(
            f"backward mass vanished at column {bad}; every path is blocked there"
        )
    return ForwardTables(ws.f_mass, ws.f_acc, ws.f_scale), BackwardTables(
        ws.b_mass, ws.b_acc, ws.b_scale
    )


def total_path_entropy(fwd: ForwardTables) -> PathStats:
    """Partition mass and entropy read off the last forward column.

    Every node of the last column is an exit, so the scaled exit masses sum
    to the scaled partition mass; the per-column scale cancels inside the
    entropy expression log(w) - a/w.
    """
    w = float(fwd.mass[-1].sum())
    a = float(fwd.acc[-1].sum())
    if w <= 0.0:
        raise InfeasibleLatticeError("no path mass reaches the last column")
    log_mass = math.log(w) + float(fwd.log_scale[-1])
    entropy = math.log(w) - a / w
    if -1.0e-9 < entropy < 0.0:
        entropy = 0.0
    return PathStats(log_mass, entropy)


def backward_log_mass(bwd: BackwardTables, dsi: Dsi, model: CostModel) -> float:
    """Partition mass recomputed from the backward sweep (consistency check)."""
    pot = np.exp(-model.score_scale * effective_costs(dsi, model)[0])
    w = float(
        (pot[:, NodeKind.MATCH] * bwd.mass[0, :, NodeKind.MATCH]).sum()
        + (pot[:, NodeKind.RIGHT_OCC] * bwd.mass[0, :, NodeKind.RIGHT_OCC]).sum()
    )
    if w <= 0.0:
        raise InfeasibleLatticeError("no path mass reaches column 0 from the exits")
    return math.log(w) + float(bwd.log_scale[0])


def column_marginals(fwd: ForwardTables, bwd: BackwardTables) -> PosteriorMarginals:
    """Combine the sweeps into per-column posteriors.

    forward includes the node's potential and backward excludes it, so the
    plain product is the exact path mass through the node up to one common
    per-column scale, which the row normalization removes.
    """
    match = fwd.mass[:, :, NodeKind.MATCH] * bwd.mass[:, :, NodeKind.MATCH]
    occlusion = fwd.mass[:, :, NodeKind.RIGHT_OCC] * bwd.mass[:, :, NodeKind.RIGHT_OCC]
    left_occ = fwd.mass[:, :, NodeKind.LEFT_OCC] * bwd.mass[:, :, NodeKind.LEFT_OCC]
    col_mass = match.sum(axis=1) + occlusion.sum(axis=1)
    if np.any(col_mass <= 0.0) or not np.all(np.isfinite(col_mass)):
        bad = int(np.argmin(col_mass > 0.0))
        raise InfeasibleLatticeError(f"posterior mass vanished at column {bad}")
    denom = col_mass[:, None]
    match /= denom
    occlusion /= denom
    left_occ /= denom
    return PosteriorMarginals(match=match, occlusion=occlusion, left_occ=left_occ)


def node_entropy(fwd: ForwardTables, bwd: BackwardTables, node: NodeId) -> float:
    """Unnormalized entropy contribution of one node (nats times mass).

    Equals sum over paths through the node of weight*log(Z/weight), i.e.
    mass(node)*logZ minus the node's weight*log(weight) accumulator; the
    latter splits exactly between the two sweeps because each path weight
    factors into prefix * suffix around the node.
    """
    i, j, kind = node
    wf = float(fwd.mass[i, j, kind])
    af = float(fwd.acc[i, j, kind])
    wb = float(bwd.mass[i, j, kind])
    ab = float(bwd.acc[i, j, kind])
    logg = float(fwd.log_scale[i] + bwd.log_scale[i])
    wlogw = af * wb + wf * ab + wf * wb * logg
    mass = wf * wb
    scale = math.exp(logg)
    stats = total_path_entropy(fwd)
    return (mass * stats.log_mass - wlogw) * scale


def viterbi(dsi: Dsi, model: CostModel, workspace: Workspace | None = None) -> ViterbiResult:
    ws = workspace if workspace is not None else Workspace()
    ws.reserve(dsi.num_columns, dsi.num_disparities)
    effective_costs(dsi, model, out=ws.costs)
    score, back = ws._viterbi_scratch()
    nodes, cost = _kernels.viterbi_pass(ws.costs, model.block_cost, score, back)
    if nodes.shape[0] == 0:
        raise InfeasibleLatticeError("all entry-to-exit paths are blocked")
    return ViterbiResult(nodes, float(cost))
