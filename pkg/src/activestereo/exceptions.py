"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Input arrays or images have incompatible shapes."""


class PgmParseError(ValueError):
    """A PGM file deviates from the P2/P5 grammar."""


class InfeasibleLatticeError(RuntimeError):
    """No usable entry-to-exit path remains (all paths blocked)."""


class UpdateRejectedError(RuntimeError):
    """A cost update was refused because it would disconnect the lattice."""


class ColumnsExhaustedError(RuntimeError):
    """Every column has already been queried; no aim can be selected."""


class EnumerationGuardError(RuntimeError):
    """The brute-force path enumerator refused an instance as too large."""
