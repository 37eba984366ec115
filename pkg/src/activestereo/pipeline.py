"""Closed-loop driver: infer, pick an aim, query, update, repeat.

A Session owns one lattice per image row plus the cached inference products
for each (marginals, path stats, best path, per-column gains).  Each step
aggregates the per-row gain vectors, lets the strategy pick a column, reads
the simulated answers off the ground truth, folds the resulting updates
into the affected rows, and re-runs inference only there.

Rows are independent, so re-inference can fan out over a thread pool; all
reductions (gain aggregation, entropy totals) run in fixed row order, which
keeps results identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .dsi import CostModel, Dsi, ScanlinePair, build_dsi
from .exceptions import DimensionError
from .inference import (
    PathStats,
    PosteriorMarginals,
    ViterbiResult,
    Workspace,
    column_marginals,
    sweeps,
    total_path_entropy,
    viterbi,
)
from .laser import (
    MISSED,
    OCCLUDED,
    ConfirmedMatch,
    ConflictEvent,
    GroundTruth,
    apply_match_update,
    apply_occlusion_update,
    conflict,
    simulate_query,
)
from .exceptions import UpdateRejectedError
from .querying import (
    Strategy,
    aggregate_information_gains,
    column_information_gains,
    select_aim,
)


@dataclass
class AimRecord:
    """State of the reconstruction after one aim (aim_index 0 = before any)."""

    aim_index: int
    column: int | None
    total_entropy: float
    pixel_errors: int | None


@dataclass
class RunMetrics:
    records: list[AimRecord] = field(default_factory=list)


@dataclass
class DisparityMap:
    values: np.ndarray  # (rows, columns) int32
    occluded: np.ndarray  # (rows, columns) bool
    num_disparities: int


@dataclass
class EntropyMap:
    values: np.ndarray  # (rows, columns) per-pixel state entropy, nats


def pixel_errors(dmap: DisparityMap, gt: GroundTruth) -> int:
    """Pixels whose estimate is off by more than one disparity level.

    Pixels the ground truth marks occluded are not counted; pixels the
    estimate marks occluded still count via the occlusion node's disparity.
    """
    ref = gt.disparity
    if ref.shape != dmap.values.shape:
        raise DimensionError(
            f"ground truth shape {ref.shape} does not match map {dmap.values.shape}"
        )
    visible = ref != OCCLUDED
    return int((visible & (np.abs(dmap.values - ref) > 1)).sum())


class Session:
    """Per-image active matching state; see the module docstring."""

    def __init__(
        self,
        left_image: np.ndarray,
        right_image: np.ndarray,
        model: CostModel,
        ground_truth: GroundTruth | None = None,
        occlusion_update: bool = True,
        threads: int = 1,
        miss_probability: float = 0.0,
        miss_rng: np.random.Generator | None = None,
    ) -> None:
        left_image = np.asarray(left_image, dtype=np.float64)
        right_image = np.asarray(right_image, dtype=np.float64)
        if left_image.ndim != 2 or right_image.ndim != 2:
            raise DimensionError("images must be 2-d (rows, width) arrays")
        if left_image.shape[0] != right_image.shape[0]:
            raise DimensionError(
                f"row counts differ: left {left_image.shape[0]} vs right {right_image.shape[0]}"
            )
        if left_image.shape[1] < right_image.shape[1]:
            raise DimensionError(
                f"left width {left_image.shape[1]} is smaller than right width "
                f"{right_image.shape[1]}; cannot form any disparity level"
            )
        self.num_rows = int(right_image.shape[0])
        self.num_columns = int(right_image.shape[1])
        self.num_disparities = int(left_image.shape[1] - right_image.shape[1] + 1)
        self.model = model
        self.ground_truth = ground_truth
        if ground_truth is not None:
            if ground_truth.num_rows != self.num_rows or ground_truth.num_columns != self.num_columns:
                raise DimensionError(
                    f"ground truth shape {ground_truth.disparity.shape} does not match "
                    f"images ({self.num_rows}, {self.num_columns})"
                )
            ground_truth.check_bounds(self.num_disparities)
        self.occlusion_update = occlusion_update
        self.threads = max(1, int(threads))
        self.miss_probability = float(miss_probability)
        self.miss_rng = miss_rng

        self.dsis: list[Dsi] = [
            build_dsi(ScanlinePair(right=right_image[r], left=left_image[r]), model)
            for r in range(self.num_rows)
        ]
        self.marginals: list[PosteriorMarginals | None] = [None] * self.num_rows
        self.path_stats: list[PathStats | None] = [None] * self.num_rows
        self.best_paths: list[ViterbiResult | None] = [None] * self.num_rows
        self.gains = np.zeros((self.num_rows, self.num_columns))
        self.confirmed: list[list[ConfirmedMatch]] = [[] for _ in range(self.num_rows)]
        self.conflicts: list[ConflictEvent] = []
        self.rejected_updates: list[tuple[int, int, int, str]] = []
        self.queried: set[int] = set()
        self.aim_count = 0
        self.metrics = RunMetrics()

    # -- inference plumbing ------------------------------------------------

    def _infer_row(self, row: int, workspace: Workspace) -> None:
        dsi = self.dsis[row]
        fwd, bwd = sweeps(dsi, self.model, workspace)
        marg = column_marginals(fwd, bwd)
        self.marginals[row] = marg
        self.path_stats[row] = total_path_entropy(fwd)
        self.best_paths[row] = viterbi(dsi, self.model, workspace)
        self.gains[row] = column_information_gains(marg)

    def _infer_rows(self, rows: list[int]) -> None:
        ws = Workspace()
        for row in rows:
            self._infer_row(row, ws)

    def _reinfer(self, rows: Iterable[int]) -> None:
        rows = list(rows)
        if self.threads > 1 and len(rows) > 1:
            chunks = [rows[k :: self.threads] for k in range(self.threads)]
            chunks = [chunk for chunk in chunks if chunk]
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                list(pool.map(self._infer_rows, chunks))
        else:
            self._infer_rows(rows)

    # -- read-out ----------------------------------------------------------

    def total_entropy(self) -> float:
        return float(sum(stats.entropy for stats in self.path_stats))

    def disparity_map(self) -> DisparityMap:
        values = np.zeros((self.num_rows, self.num_columns), dtype=np.int32)
        occluded = np.zeros((self.num_rows, self.num_columns), dtype=bool)
        for row in range(self.num_rows):
            disp, occ = self.best_paths[row].disparity_profile()
            values[row] = disp
            occluded[row] = occ
        return DisparityMap(values, occluded, self.num_disparities)

    def entropy_map(self) -> EntropyMap:
        values = np.zeros((self.num_rows, self.num_columns))
        for row in range(self.num_rows):
            marg = self.marginals[row]
            match, occ = marg.match, marg.occlusion
            safe_m = np.where(match > 0.0, match, 1.0)
            safe_o = np.where(occ > 0.0, occ, 1.0)
            values[row] = -(match * np.log(safe_m)).sum(axis=1) - (occ * np.log(safe_o)).sum(axis=1)
        return EntropyMap(values)

    def pixel_errors(self) -> int | None:
        if self.ground_truth is None:
            return None
        return pixel_errors(self.disparity_map(), self.ground_truth)

    def _record(self, column: int | None) -> AimRecord:
        record = AimRecord(self.aim_count, column, self.total_entropy(), self.pixel_errors())
        self.metrics.records.append(record)
        return record

    # -- the loop ----------------------------------------------------------

    def step(self, strategy: Strategy) -> AimRecord:
        """Fire one aim: select, query, update, re-infer, record."""
        if self.ground_truth is None:
            raise ValueError("stepping needs ground truth to answer the query")
        total_gains = aggregate_information_gains(self.gains)
        column = select_aim(total_gains, self.queried, strategy, aim_index=self.aim_count)
        aim_index = self.aim_count + 1
        answers = simulate_query(
            self.ground_truth, column, self.miss_probability, self.miss_rng
        )
        changed: list[int] = []
        for row in range(self.num_rows):
            answer = int(answers[row])
            if answer == MISSED:
                continue
            if answer == OCCLUDED:
                if not self.occlusion_update:
                    continue
                try:
                    apply_occlusion_update(self.dsis[row], column, self.model)
                    changed.append(row)
                except UpdateRejectedError:
                    self.rejected_updates.append((row, aim_index, column, "occlusion"))
                continue
            prior = conflict(self.confirmed[row], column, answer)
            if prior is not None:
                self.conflicts.append(
                    ConflictEvent(row, aim_index, prior.col, prior.disp, column, answer)
                )
                continue
            try:
                apply_match_update(self.dsis[row], column, answer, self.model)
            except UpdateRejectedError:
                self.rejected_updates.append((row, aim_index, column, "match"))
                continue
            self.confirmed[row].append(ConfirmedMatch(row, column, answer, aim_index))
            changed.append(row)
        self._reinfer(changed)
        self.queried.add(column)
        self.aim_count = aim_index
        return self._record(column)

    def run(
        self,
        num_aims: int,
        strategy: Strategy,
        on_step: Callable[[Session, AimRecord], None] | None = None,
    ) -> RunMetrics:
        """Fire num_aims aims (or until columns run out) and return metrics."""
        from .exceptions import ColumnsExhaustedError

        for _ in range(num_aims):
            try:
                record = self.step(strategy)
            except ColumnsExhaustedError:
                break
            if on_step is not None:
                on_step(self, record)
        return self.metrics


def initialize(
    left_image: np.ndarray,
    right_image: np.ndarray,
    model: CostModel,
    ground_truth: GroundTruth | None = None,
    occlusion_update: bool = True,
    threads: int = 1,
    miss_probability: float = 0.0,
    miss_rng: np.random.Generator | None = None,
) -> Session:
    """Build a session, run the first full inference, record the baseline."""
    session = Session(
        left_image,
        right_image,
        model,
        ground_truth=ground_truth,
        occlusion_update=occlusion_update,
        threads=threads,
        miss_probability=miss_probability,
        miss_rng=miss_rng,
    )
    session._reinfer(range(session.num_rows))
    session._record(None)
    return session
