"""Column scoring and aim selection for the active querying loop.

The payoff of asking about column i is the expected drop in path entropy
once that column's state is revealed.  Revealing the state either pins the
disparity (match outcome j) or announces an occlusion without saying which
occlusion node, so the occlusion outcomes stay pooled.  By the entropy
chain rule the expected drop equals the entropy of the outcome distribution
{P(match, j)}_j + {P(occluded)}, which is the form computed here: it is
identical to "state entropy minus occlusion mass times pooled occlusion
entropy" but is a sum of nonnegative terms, so it can never go negative
through cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ColumnsExhaustedError
from .inference import PosteriorMarginals


def _xlogx(values: np.ndarray) -> np.ndarray:
    """x*log(x) with the 0*log(0)=0 convention, NaN-free."""
    safe = np.where(values > 0.0, values, 1.0)
    return np.where(values > 0.0, values * np.log(safe), 0.0)


def state_entropy(marginals: PosteriorMarginals, column: int) -> float:
    """Entropy of the full per-column state (all match and occlusion nodes)."""
    return float(
        -_xlogx(marginals.match[column]).sum() - _xlogx(marginals.occlusion[column]).sum()
    )


def occlusion_split(marginals: PosteriorMarginals, column: int) -> tuple[float, float]:
    """(total occlusion probability, entropy among the occlusion nodes)."""
    occ = marginals.occlusion[column]
    p = float(occ.sum())
    if p <= 0.0:
        return 0.0, 0.0
    q = occ / p
    return p, float(-_xlogx(q).sum())


def column_information_gains(marginals: PosteriorMarginals) -> np.ndarray:
    """Expected path-entropy drop for querying each column, as an (n,) array."""
    p_occ = marginals.occlusion.sum(axis=1)
    return -_xlogx(marginals.match).sum(axis=1) - _xlogx(p_occ)


def information_gain(marginals: PosteriorMarginals, column: int) -> float:
    return float(column_information_gains(marginals)[column])


def aggregate_information_gains(per_row_gains: np.ndarray) -> np.ndarray:
    """Sum per-row gain vectors into one (n,) score for whole-image aims."""
    per_row_gains = np.atleast_2d(np.asarray(per_row_gains, dtype=np.float64))
    return per_row_gains.sum(axis=0)


@dataclass(frozen=True)
class InfoGainStrategy:
    """Pick the not-yet-queried column with the largest summed gain."""

    name: str = field(default="info-gain", init=False)


@dataclass
class RandomStrategy:
    """Pick uniformly among not-yet-queried columns, reproducibly from seed."""

    seed: int
    name: str = field(default="random", init=False)
    _rng: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = np.random.default_rng(self.seed)
        return self._rng


@dataclass(frozen=True)
class EvenSpreadStrategy:
    """Place aims at evenly spaced columns, ignoring gains entirely."""

    total_aims: int
    name: str = field(default="even", init=False)

    def __post_init__(self) -> None:
        if self.total_aims < 1:
            raise ValueError("total_aims must be at least 1")


Strategy = InfoGainStrategy | RandomStrategy | EvenSpreadStrategy


def select_aim(
    gains: np.ndarray,
    excluded: set[int],
    strategy: Strategy,
    aim_index: int = 0,
) -> int:
    """Choose the next column to query.

    gains is the aggregated (n,) score vector; excluded holds columns already
    queried.  aim_index is how many aims were fired before this one, which
    the even-spread strategy uses to find its slot.
    """
    gains = np.asarray(gains, dtype=np.float64)
    n = gains.shape[0]
    open_cols = [i for i in range(n) if i not in excluded]
    if not open_cols:
        raise ColumnsExhaustedError(f"all {n} columns have been queried")
    if isinstance(strategy, InfoGainStrategy):
        best = open_cols[0]
        for i in open_cols[1:]:
            if gains[i] > gains[best]:
                best = i
        return best
    if isinstance(strategy, RandomStrategy):
        return int(strategy.rng().choice(np.asarray(open_cols, dtype=np.int64)))
    if isinstance(strategy, EvenSpreadStrategy):
        target = int((aim_index + 1) * n / (strategy.total_aims + 1) + 0.5)
        target = min(max(target, 0), n - 1)
        return min(open_cols, key=lambda i: (abs(i - target), i))
    raise TypeError(f"unknown strategy {strategy!r}")
