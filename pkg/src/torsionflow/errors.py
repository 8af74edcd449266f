"""Exception hierarchy shared by all modules."""


class TorsionFlowError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 10


class GridSizeError(TorsionFlowError, ValueError):
    """The sphere grid has too few nodes for the derivative stencils."""

    exit_code = 2


class ConvexityError(TorsionFlowError):
    """A support function lost strict convexity (or positivity).

    Attributes
    ----------
    node : int
        Index of the worst node.
    margin : float
        Smallest curvature-radius eigenvalue (or smallest ``h``) found.
    """

    exit_code = 3

    def __init__(self, message, node=-1, margin=float("nan")):
        super().__init__(message)
        self.node = node
        self.margin = margin


class SolverError(TorsionFlowError):
    """The interior boundary value solve failed or produced an invalid trace."""

    exit_code = 4


class CapabilityError(TorsionFlowError):
    """The requested (k, geometry) combination has no shipped backend."""

    exit_code = 5


class StiffnessError(TorsionFlowError):
    """Time step fell below ``dt_min`` while retrying a flow step."""

    exit_code = 6

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(TorsionFlowError, ValueError):
    """Malformed or semantically invalid run configuration."""

    exit_code = 2


class GridMismatchError(TorsionFlowError, ValueError):
    """Fields defined on different sphere grids were combined."""

    exit_code = 2
