"""Brute-force path enumeration used to cross-check the O(n*d) passes.

Everything here is deliberately naive: enumerate every entry-to-exit path,
then compute partition mass, marginals, entropies, and information gain
straight from the path list.  Exponential in n, guarded accordingly, and
only meant for lattices of a handful of columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsi import (
    CostModel,
    Dsi,
    NodeId,
    NodeKind,
    dsi_from_scores,
    effective_costs,
    entry_nodes,
    successors,
)
from .exceptions import EnumerationGuardError

DEFAULT_PATH_GUARD = 1_000_000


@dataclass(frozen=True)
class WeightedPath:
    """One complete path with its weight and additively accumulated cost.

    cost is summed front to back, one node at a time, so it reproduces the
    float associativity of a left-to-right dynamic program.
    """

    nodes: tuple[NodeId, ...]
    weight: float
    cost: float


@dataclass
class PathSet:
    num_columns: int
    num_disparities: int
    paths: list[WeightedPath]


def count_paths(dsi: Dsi) -> int:
    """Exact path count via integer dynamic programming (no float caps)."""
    n, d = dsi.num_columns, dsi.num_disparities
    counts: dict[NodeId, int] = {}
    for i in range(n):
        for j in range(d):
            node = NodeId(i, j, NodeKind.MATCH)
            counts[node] = (
                1
                if i == 0
                else counts[NodeId(i - 1, j, NodeKind.MATCH)]
                + counts[NodeId(i - 1, j, NodeKind.LEFT_OCC)]
                + counts[NodeId(i - 1, j, NodeKind.RIGHT_OCC)]
            )
            node = NodeId(i, j, NodeKind.RIGHT_OCC)
            if i == 0:
                counts[node] = 1
            elif j > 0:
                counts[node] = (
                    counts[NodeId(i - 1, j - 1, NodeKind.MATCH)]
                    + counts[NodeId(i - 1, j - 1, NodeKind.RIGHT_OCC)]
                )
            else:
                counts[node] = 0
        counts[NodeId(i, d - 1, NodeKind.LEFT_OCC)] = 0
        for j in range(d - 2, -1, -1):
            counts[NodeId(i, j, NodeKind.LEFT_OCC)] = (
                counts[NodeId(i, j + 1, NodeKind.MATCH)]
                + counts[NodeId(i, j + 1, NodeKind.LEFT_OCC)]
            )
    return sum(
        counts[NodeId(n - 1, j, kind)] for j in range(d) for kind in NodeKind
    )


def enumerate_paths(
    dsi: Dsi, model: CostModel, max_paths: int = DEFAULT_PATH_GUARD
) -> PathSet:
    """List every entry-to-exit path with its weight and cost.

    Blocked nodes still appear (with weight factor exp(-scale*block), i.e.
    zero in practice); min-cost consumers filter those paths out by
    inspecting node costs.
    """
    total = count_paths(dsi)
    if total > max_paths:
        raise EnumerationGuardError(
            f"{total} paths exceed the enumeration guard of {max_paths}"
        )
    n, d = dsi.num_columns, dsi.num_disparities
    costs = effective_costs(dsi, model)
    logpots = -model.score_scale * costs
    paths: list[WeightedPath] = []

    def extend(node: NodeId, trail: list[NodeId], logweight: float, cost: float) -> None:
        i, j, kind = node
        logweight = logweight + logpots[i, j, kind]
        cost = costs[i, j, kind] + cost
        trail.append(node)
        if i == n - 1:
            paths.append(WeightedPath(tuple(trail), math.exp(logweight), cost))
        for nxt in sorted(successors(node, n, d)):
            extend(nxt, trail, logweight, cost)
        trail.pop()

    for entry in sorted(entry_nodes(dsi)):
        extend(entry, [], 0.0, 0.0)
    return PathSet(n, d, paths)


@dataclass
class OracleStats:
    """Exact path-distribution statistics computed from an explicit list."""

    total_mass: float
    path_entropy: float
    node_mass: np.ndarray  # (n, d, 3) sum of weights of paths through node
    node_wlogw: np.ndarray  # (n, d, 3) sum of weight*log(weight)


def oracle_stats(paths: PathSet) -> OracleStats:
    node_mass = np.zeros((paths.num_columns, paths.num_disparities, 3))
    node_wlogw = np.zeros_like(node_mass)
    total = 0.0
    wlogw = 0.0
    for path in paths.paths:
        w = path.weight
        total += w
        t = w * math.log(w) if w > 0.0 else 0.0
        wlogw += t
        for i, j, kind in path.nodes:
            node_mass[i, j, kind] += w
            node_wlogw[i, j, kind] += t
    entropy = math.log(total) - wlogw / total if total > 0.0 else float("nan")
    return OracleStats(total, entropy, node_mass, node_wlogw)


def oracle_node_entropy(stats: OracleStats, node: NodeId) -> float:
    """Unnormalized entropy contribution of one node: sum over paths
    through it of w*log(Z/w), written as mass*logZ - wlogw."""
    i, j, kind = node
    m = stats.node_mass[i, j, kind]
    if m == 0.0:
        return 0.0
    return m * math.log(stats.total_mass) - stats.node_wlogw[i, j, kind]


def oracle_column_marginals(stats: OracleStats, column: int) -> np.ndarray:
    """(d, 2) posterior over the column's match and right-occ nodes."""
    block = stats.node_mass[column][:, [NodeKind.MATCH, NodeKind.RIGHT_OCC]]
    return block / stats.total_mass


def oracle_path_entropy_direct(paths: PathSet) -> float:
    """Entropy from explicitly normalized probabilities, as a double check."""
    total = sum(p.weight for p in paths.paths)
    h = 0.0
    for p in paths.paths:
        if p.weight > 0.0:
            q = p.weight / total
            h -= q * math.log(q)
    return h


def oracle_information_gain(paths: PathSet, column: int) -> float:
    """Expected entropy drop from observing the column's state.

    Outcomes are the d disparity values plus one pooled occlusion outcome;
    each path lands in exactly one of them via its match or right-occ node
    at that column.
    """
    groups: dict[int, list[float]] = {}
    for path in paths.paths:
        key = None
        for i, j, kind in path.nodes:
            if i == column and kind != NodeKind.LEFT_OCC:
                key = j if kind == NodeKind.MATCH else -1
                break
        if key is None:
            raise AssertionError("path missing a match/right-occ node at column")
        groups.setdefault(key, []).append(path.weight)
    total = sum(w for ws in groups.values() for w in ws)
    before = oracle_path_entropy_direct(paths)
    after = 0.0
    for ws in groups.values():
        gmass = sum(ws)
        if gmass <= 0.0:
            continue
        gh = 0.0
        for w in ws:
            if w > 0.0:
                q = w / gmass
                gh -= q * math.log(q)
        after += (gmass / total) * gh
    return before - after


def oracle_min_cost(paths: PathSet, dsi: Dsi, model: CostModel) -> float | None:
    """Cheapest accumulated cost over paths that avoid blocked nodes."""
    costs = effective_costs(dsi, model)
    best: float | None = None
    for path in paths.paths:
        if any(costs[i, j, kind] >= model.block_cost for i, j, kind in path.nodes):
            continue
        if best is None or path.cost < best:
            best = path.cost
    return best


def path_is_valid(dsi: Dsi, model: CostModel, nodes: list[NodeId]) -> bool:
    """Entry start, exit end, legal arcs, and no blocked node anywhere."""
    if not nodes:
        return False
    n, d = dsi.num_columns, dsi.num_disparities
    if nodes[0] not in entry_nodes(dsi):
        return False
    if nodes[-1].col != n - 1:
        return False
    costs = effective_costs(dsi, model)
    for node in nodes:
        if costs[node.col, node.disp, node.kind] >= model.block_cost:
            return False
    for a, b in zip(nodes, nodes[1:]):
        if b not in successors(a, n, d):
            return False
    return True


def random_instance(
    rng: np.random.Generator,
    max_columns: int = 7,
    max_disparities: int = 3,
) -> tuple[Dsi, CostModel]:
    """Small random lattice for self-checks: scores U[0,3), penalties U[0.5,3)."""
    n = int(rng.integers(2, max_columns + 1))
    d = int(rng.integers(1, max_disparities + 1))
    scores = rng.uniform(0.0, 3.0, size=(n, d))
    model = CostModel(
        left_occ_penalty=float(rng.uniform(0.5, 3.0)),
        right_occ_penalty=float(rng.uniform(0.5, 3.0)),
        score_scale=1.0,
        block_cost=1.0e9,
        soft_cost=25.0,
    )
    return dsi_from_scores(scores), model


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def selfcheck(
    seed: int,
    count: int = 100,
    tol: float = 1.0e-9,
    corrupt: bool = False,
) -> tuple[bool, list[str]]:
    """Compare the fast passes against enumeration on random lattices.

    Returns (all_ok, report_lines).  corrupt=True injects a deliberate error
    into one comparison to prove the harness can fail.
    """
    from . import inference
    from .querying import column_information_gains

    rng = np.random.default_rng(seed)
    lines: list[str] = []
    ok = True
    for trial in range(count):
        dsi, model = random_instance(rng)
        paths = enumerate_paths(dsi, model)
        stats = oracle_stats(paths)
        fwd = inference.forward(dsi, model)
        bwd = inference.backward(dsi, model)
        marg = inference.column_marginals(fwd, bwd)
        path_stats = inference.total_path_entropy(fwd)
        problems: list[str] = []

        z_fast = math.exp(path_stats.log_mass)
        z_ref = stats.total_mass
        if corrupt and trial == 0:
            z_ref *= 1.0 + 1.0e-3
        if not _close(z_fast, z_ref, tol):
            problems.append(f"mass {z_fast!r} vs {z_ref!r}")
        if not _close(path_stats.entropy, stats.path_entropy, tol):
            problems.append(f"entropy {path_stats.entropy!r} vs {stats.path_entropy!r}")
        for i in range(dsi.num_columns):
            ref = oracle_column_marginals(stats, i)
            got = np.stack([marg.match[i], marg.occlusion[i]], axis=1)
            if not np.all(np.abs(got - ref) <= tol * np.maximum(1.0, np.abs(ref))):
                problems.append(f"marginals at column {i}")
        for node in dsi.nodes():
            ref_h = oracle_node_entropy(stats, node)
            got_h = inference.node_entropy(fwd, bwd, node)
            if not _close(got_h, ref_h, tol):
                problems.append(f"node entropy at {tuple(node)}: {got_h!r} vs {ref_h!r}")
                break
        gains = column_information_gains(marg)
        for i in range(dsi.num_columns):
            ref_g = oracle_information_gain(paths, i)
            if not _close(float(gains[i]), ref_g, tol):
                problems.append(f"gain at column {i}: {gains[i]!r} vs {ref_g!r}")
        vit = inference.viterbi(dsi, model)
        ref_min = oracle_min_cost(paths, dsi, model)
        if ref_min is None:
            problems.append("oracle found no unblocked path")
        else:
            if vit.cost != ref_min:
                problems.append(f"viterbi cost {vit.cost!r} vs {ref_min!r}")
            if not path_is_valid(dsi, model, vit.path):
                problems.append("viterbi path is not a valid unblocked path")
            costs = effective_costs(dsi, model)
            attained = 0.0
            for node in vit.path:
                attained = float(costs[node.col, node.disp, node.kind]) + attained
            if attained != vit.cost:
                problems.append(f"viterbi path cost {attained!r} does not attain {vit.cost!r}")

        if problems:
            ok = False
            lines.append(
                f"trial {trial}: n={dsi.num_columns} d={dsi.num_disparities} "
                + "; ".join(problems)
            )
    lines.append(
        f"{'ok' if ok else 'FAILED'}: {count} random lattices checked against enumeration"
    )
    return ok, lines
