"""Exception types shared across the package."""


class UsageError(ValueError):
    """Malformed or conflicting configuration; maps to CLI exit code 2."""


class PotentialRangeError(ValueError):
    """Table potential queried outside its abscissa range with no extrapolation rule."""


class PotentialConstructionError(ValueError):
    """Table data incompatible with the double-well invariants (zeros only at the wells)."""


class NumericError(ValueError):
    """Non-finite value encountered during assembly; carries the offending node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ThresholdError(ValueError):
    """A coefficient violates its admissibility threshold; names the offending order."""

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class ScaleFloorError(RuntimeError):
    """Requested scale cannot be resolved on an affordable grid."""


class DiagnosticFailure(RuntimeError):
    """A run-level diagnostic failed (nonmonotone table, missing inputs); CLI exit code 1."""
