"""Exception hierarchy shared by the solver modules and the CLI."""


class ViscowaveError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ViscowaveError, ValueError):
    """Invalid run configuration or problem data."""


class OutOfRange(ViscowaveError, ValueError):
    """Argument outside the domain covered by the data (e.g. a tabulated kernel)."""


class NonFinite(ViscowaveError, ValueError):
    """A NaN or infinity appeared in an input value."""


class LengthMismatch(ViscowaveError, ValueError):
    """Nodal field does not match the grid it is used with."""


class SolverError(ViscowaveError, RuntimeError):
    """Time stepping failed."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class NonFiniteState(SolverError):
    """The state or its time derivative became NaN/inf."""


class MaxPicardIters(SolverError):
    """Picard iteration did not reach the tolerance within the iteration budget."""


class NonPositiveEnergy(ViscowaveError, ValueError):
    """Decay fit window contains E <= 0, so log E is undefined."""
