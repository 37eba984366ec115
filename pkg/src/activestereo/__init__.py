"""Scanline stereo matching with path posteriors and entropy-guided queries.

The disparity space image of one scanline pair is treated as a lattice of
match/occlusion nodes whose entry-to-exit paths are surface profiles.  One
forward/backward sweep pair per scanline yields the best path, the full
path posterior's column marginals, and the distribution's entropy, all in
time linear in the lattice size; the querying loop spends simulated
structured-light probes where the expected entropy drop is largest.
"""

from .dsi import (
    CostModel,
    Dsi,
    NodeId,
    NodeKind,
    ScanlinePair,
    build_dsi,
    dsi_from_scores,
)
from .exceptions import (
    ColumnsExhaustedError,
    DimensionError,
    EnumerationGuardError,
    InfeasibleLatticeError,
    PgmParseError,
    UpdateRejectedError,
)
from .image_io import (
    GrayImage,
    read_ground_truth,
    read_pgm,
    write_conflict_csv,
    write_disparity_pgm,
    write_entropy_pgm,
    write_metrics_csv,
    write_pgm,
)
from .inference import (
    PathStats,
    PosteriorMarginals,
    ViterbiResult,
    Workspace,
    backward,
    column_marginals,
    forward,
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
from .pipeline import (
    AimRecord,
    DisparityMap,
    EntropyMap,
    RunMetrics,
    Session,
    initialize,
    pixel_errors,
)
from .querying import (
    EvenSpreadStrategy,
    InfoGainStrategy,
    RandomStrategy,
    column_information_gains,
    information_gain,
    select_aim,
    state_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "AimRecord",
    "ColumnsExhaustedError",
    "ConfirmedMatch",
    "ConflictEvent",
    "CostModel",
    "DimensionError",
    "DisparityMap",
    "Dsi",
    "EntropyMap",
    "EnumerationGuardError",
    "EvenSpreadStrategy",
    "GrayImage",
    "GroundTruth",
    "InfeasibleLatticeError",
    "InfoGainStrategy",
    "MISSED",
    "NodeId",
    "NodeKind",
    "OCCLUDED",
    "PathStats",
    "PgmParseError",
    "PosteriorMarginals",
    "RandomStrategy",
    "RunMetrics",
    "ScanlinePair",
    "Session",
    "UpdateRejectedError",
    "ViterbiResult",
    "Workspace",
    "apply_match_update",
    "apply_occlusion_update",
    "backward",
    "build_dsi",
    "column_information_gains",
    "column_marginals",
    "conflict",
    "dsi_from_scores",
    "forward",
    "information_gain",
    "initialize",
    "pixel_errors",
    "read_ground_truth",
    "read_pgm",
    "select_aim",
    "simulate_query",
    "state_entropy",
    "sweeps",
    "total_path_entropy",
    "viterbi",
    "write_conflict_csv",
    "write_disparity_pgm",
    "write_entropy_pgm",
    "write_metrics_csv",
    "write_pgm",
]
