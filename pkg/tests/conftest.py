"""Shared fixtures: tiny synthetic scenes that the laser geometry can pin.

Scene profiles here are monotone non-increasing with any unit drops well
separated.  Lattice paths can only lower the left-column index offset as
the column grows, so a rise needs occluded ground-truth pixels and two
adjacent drops share a diagonal with an earlier confirmation; keeping test
profiles flat or gently stepped means every simulated answer is actually
representable and updates never fight each other.
"""

import numpy as np
import pytest

from activestereo import CostModel, GroundTruth


def _scene_from_profile(profile: np.ndarray, rows: int, num_disparities: int, seed: int):
    rng = np.random.default_rng(seed)
    columns = profile.size
    left_width = columns + num_disparities - 1
    base = rng.uniform(40.0, 210.0, size=left_width)
    base = np.convolve(base, np.ones(5) / 5.0, mode="same")
    left = np.tile(base, (rows, 1))
    cols = np.arange(columns)
    right = left[:, cols + profile]
    gt = GroundTruth(np.tile(profile.astype(np.int32), (rows, 1)))
    return left, right, gt


@pytest.fixture
def flat_scene():
    """Factory for a noise-free scene with one constant disparity."""

    def make(rows=2, columns=16, num_disparities=4, disparity=2, seed=11):
        assert 0 <= disparity < num_disparities
        profile = np.full(columns, disparity, dtype=np.int32)
        return _scene_from_profile(profile, rows, num_disparities, seed)

    return make


@pytest.fixture
def step_scene():
    """Factory for a scene whose disparity drops by one at a given column."""

    def make(rows=2, columns=16, num_disparities=4, high=2, drop_at=8, seed=12):
        assert 1 <= high < num_disparities
        assert 2 <= drop_at <= columns - 2
        profile = np.full(columns, high, dtype=np.int32)
        profile[drop_at:] = high - 1
        return _scene_from_profile(profile, rows, num_disparities, seed)

    return make


@pytest.fixture
def default_model():
    return CostModel()
