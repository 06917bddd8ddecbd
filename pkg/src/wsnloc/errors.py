"""Exception types shared across the package."""


class WsnlocError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefiniteError(WsnlocError):
    """A symmetric factorization hit a non-positive pivot."""


class SingularSubmatrixError(WsnlocError):
    """A principal submatrix required by the banded inversion is not invertible.

    Usually means the band parameter L is too small or the input is not SPD.
    """


class DisconnectedGraphError(WsnlocError):
    """The graph is disconnected, so its diameter is undefined."""


class CoincidentEndpointsError(WsnlocError):
    """Two endpoint estimates of a distance edge coincide; the distance
    derivative is undefined there."""


class FilterDivergenceError(WsnlocError):
    """The banded filter recursion broke down at a given timestep."""

    def __init__(self, timestep, reason):
        self.timestep = timestep
        self.reason = reason
        super().__init__(f"filter diverged at timestep {timestep}: {reason}")


class AllTrialsDivergedError(WsnlocError):
    """Every Monte Carlo trial diverged; no curves can be averaged."""
