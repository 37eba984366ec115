"""Lattice layout, cost model, and topology invariants."""

import math

import numpy as np
import pytest

from activestereo import CostModel, DimensionError, NodeId, NodeKind, build_dsi, dsi_from_scores
from activestereo.dsi import (
    ScanlinePair,
    apply_cost_override,
    effective_costs,
    entry_nodes,
    exit_nodes,
    has_unblocked_path,
    node_cost,
    node_potential,
    predecessors,
    successors,
)


def test_cost_model_defaults():
    model = CostModel()
    assert model.left_occ_penalty == 25.0
    assert model.right_occ_penalty == 25.0
    assert model.score_scale == 0.1
    assert model.soft_cost == 15.0 * 25.0
    assert model.block_cost == 1.0e9


def test_cost_model_soft_cost_tracks_larger_penalty():
    model = CostModel(left_occ_penalty=2.0, right_occ_penalty=8.0)
    assert model.soft_cost == 120.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"score_scale": 0.0},
        {"score_scale": -1.0},
        {"left_occ_penalty": -0.1},
        {"right_occ_penalty": -5.0},
        {"score_kind": "census"},
        {"soft_cost": 0.0},
        {"soft_cost": 2.0e9},
    ],
)
def test_cost_model_rejects_bad_knobs(kwargs):
    with pytest.raises(ValueError):
        CostModel(**kwargs)


def test_pixel_score_abs_and_squared():
    model_abs = CostModel(score_kind="abs")
    model_sq = CostModel(score_kind="squared")
    left = np.array([1.0, 5.0])
    right = np.array([4.0, 4.0])
    np.testing.assert_allclose(model_abs.pixel_score(left, right), [3.0, 1.0])
    np.testing.assert_allclose(model_sq.pixel_score(left, right), [9.0, 1.0])


def test_scanline_pair_shapes():
    pair = ScanlinePair(right=[1.0, 2.0], left=[1.0, 2.0, 4.0, 7.0])
    assert pair.num_columns == 2
    assert pair.num_disparities == 3


def test_scanline_pair_rejects_short_left():
    with pytest.raises(DimensionError):
        ScanlinePair(right=[1.0, 2.0, 3.0], left=[1.0, 2.0])


def test_scanline_pair_rejects_empty_right():
    with pytest.raises(DimensionError):
        ScanlinePair(right=[], left=[1.0])


def test_build_dsi_scores_by_hand():
    pair = ScanlinePair(right=[1.0, 2.0], left=[1.0, 2.0, 4.0])
    dsi = build_dsi(pair, CostModel(score_kind="abs"))
    # scores[i, j] = |left[i + j] - right[i]|
    np.testing.assert_allclose(dsi.scores, [[0.0, 1.0], [0.0, 2.0]])


def test_dsi_from_scores_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        dsi_from_scores(np.zeros(5))
    with pytest.raises(DimensionError):
        dsi_from_scores(np.zeros((0, 3)))


def test_node_cost_and_override_precedence():
    model = CostModel(left_occ_penalty=3.0, right_occ_penalty=4.0)
    dsi = dsi_from_scores(np.array([[1.0, 2.0], [5.0, 6.0]]))
    assert node_cost(dsi, NodeId(0, 1, NodeKind.MATCH), model) == 2.0
    assert node_cost(dsi, NodeId(1, 0, NodeKind.LEFT_OCC), model) == 3.0
    assert node_cost(dsi, NodeId(1, 0, NodeKind.RIGHT_OCC), model) == 4.0
    apply_cost_override(dsi, NodeId(0, 1, NodeKind.MATCH), 9.0)
    apply_cost_override(dsi, NodeId(0, 1, NodeKind.MATCH), 7.0)  # last write wins
    assert node_cost(dsi, NodeId(0, 1, NodeKind.MATCH), model) == 7.0


def test_override_rejects_negative_and_nan():
    dsi = dsi_from_scores(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        apply_cost_override(dsi, NodeId(0, 0, NodeKind.MATCH), -1.0)
    with pytest.raises(ValueError):
        apply_cost_override(dsi, NodeId(0, 0, NodeKind.MATCH), float("nan"))


def test_node_cost_range_check():
    dsi = dsi_from_scores(np.zeros((2, 2)))
    with pytest.raises(IndexError):
        node_cost(dsi, NodeId(2, 0, NodeKind.MATCH), CostModel())
    with pytest.raises(IndexError):
        node_cost(dsi, NodeId(0, 2, NodeKind.MATCH), CostModel())


def test_node_potential_is_exp_of_scaled_cost():
    model = CostModel(score_scale=0.5)
    dsi = dsi_from_scores(np.array([[3.0]]))
    assert node_potential(dsi, NodeId(0, 0, NodeKind.MATCH), model) == pytest.approx(
        math.exp(-1.5), rel=0, abs=0
    )


def test_effective_costs_agree_with_node_cost():
    model = CostModel(left_occ_penalty=2.0, right_occ_penalty=5.0)
    rng = np.random.default_rng(3)
    dsi = dsi_from_scores(rng.uniform(0.0, 9.0, size=(4, 3)))
    apply_cost_override(dsi, NodeId(2, 1, NodeKind.LEFT_OCC), 0.25)
    costs = effective_costs(dsi, model)
    for node in dsi.nodes():
        assert costs[node.col, node.disp, node.kind] == node_cost(dsi, node, model)


def test_effective_costs_out_buffer_reuse():
    model = CostModel()
    dsi = dsi_from_scores(np.arange(12.0).reshape(4, 3))
    fresh = effective_costs(dsi, model)
    buf = np.full((4, 3, 3), -1.0)
    reused = effective_costs(dsi, model, out=buf)
    assert reused is buf
    np.testing.assert_array_equal(reused, fresh)


def test_predecessor_successor_duality():
    n, d = 4, 3
    dsi = dsi_from_scores(np.zeros((n, d)))
    for a in dsi.nodes():
        for b in successors(a, n, d):
            assert a in predecessors(b, n, d), f"{a} -> {b} has no reverse"
    for b in dsi.nodes():
        for a in predecessors(b, n, d):
            assert b in successors(a, n, d), f"{a} -> {b} missing forward"


def test_arc_shapes_by_kind():
    n, d = 5, 4
    m = NodeId(2, 1, NodeKind.MATCH)
    assert successors(m, n, d) == {
        NodeId(3, 1, NodeKind.MATCH),
        NodeId(3, 2, NodeKind.RIGHT_OCC),
        NodeId(2, 0, NodeKind.LEFT_OCC),
    }
    r = NodeId(2, 1, NodeKind.RIGHT_OCC)
    assert predecessors(r, n, d) == {
        NodeId(1, 0, NodeKind.MATCH),
        NodeId(1, 0, NodeKind.RIGHT_OCC),
    }
    left = NodeId(2, 1, NodeKind.LEFT_OCC)
    assert predecessors(left, n, d) == {
        NodeId(2, 2, NodeKind.MATCH),
        NodeId(2, 2, NodeKind.LEFT_OCC),
    }
    assert successors(left, n, d) == {
        NodeId(3, 1, NodeKind.MATCH),
        NodeId(2, 0, NodeKind.LEFT_OCC),
    }


def test_boundary_nodes_have_trimmed_arcs():
    n, d = 3, 2
    assert predecessors(NodeId(0, 0, NodeKind.MATCH), n, d) == set()
    assert predecessors(NodeId(1, 0, NodeKind.RIGHT_OCC), n, d) == set()
    assert predecessors(NodeId(1, d - 1, NodeKind.LEFT_OCC), n, d) == set()
    assert successors(NodeId(n - 1, 0, NodeKind.MATCH), n, d) == set()


def test_entry_and_exit_sets():
    dsi = dsi_from_scores(np.zeros((3, 2)))
    assert entry_nodes(dsi) == {
        NodeId(0, 0, NodeKind.MATCH),
        NodeId(0, 1, NodeKind.MATCH),
        NodeId(0, 0, NodeKind.RIGHT_OCC),
        NodeId(0, 1, NodeKind.RIGHT_OCC),
    }
    exits = exit_nodes(dsi)
    assert len(exits) == 6
    assert all(node.col == 2 for node in exits)


def test_has_unblocked_path_open_lattice():
    dsi = dsi_from_scores(np.zeros((4, 3)))
    assert has_unblocked_path(dsi, CostModel())


def test_has_unblocked_path_blocked_entries():
    model = CostModel()
    dsi = dsi_from_scores(np.zeros((4, 3)))
    for j in range(3):
        apply_cost_override(dsi, NodeId(0, j, NodeKind.MATCH), model.block_cost)
        apply_cost_override(dsi, NodeId(0, j, NodeKind.RIGHT_OCC), model.block_cost)
    assert not has_unblocked_path(dsi, model)


def test_has_unblocked_path_occlusion_detour():
    """Blocking every match of an interior column leaves occlusion routes."""
    model = CostModel()
    dsi = dsi_from_scores(np.zeros((4, 3)))
    for j in range(3):
        apply_cost_override(dsi, NodeId(2, j, NodeKind.MATCH), model.block_cost)
    assert has_unblocked_path(dsi, model)
    for j in range(3):
        apply_cost_override(dsi, NodeId(2, j, NodeKind.RIGHT_OCC), model.block_cost)
    assert not has_unblocked_path(dsi, model)
