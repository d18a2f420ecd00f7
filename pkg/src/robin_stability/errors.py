"""Exception hierarchy shared by all modules."""


class RobinStabilityError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(RobinStabilityError, ValueError):
    """Non-finite or otherwise malformed numeric input."""


class OutOfRangeError(RobinStabilityError, ValueError):
    """A parameter lies outside the range an operation supports."""


class BracketError(RobinStabilityError, ValueError):
    """Root search interval does not contain a sign change."""


class DomainError(RobinStabilityError, ValueError):
    """Invalid star-shaped domain (forbidden modes or non-positive radius)."""


class DomainFileError(RobinStabilityError, ValueError):
    """A domain description file could not be parsed."""


class MeshQualityError(RobinStabilityError):
    """Triangulation failed the element quality requirements."""


class AssemblyError(RobinStabilityError):
    """Finite-element assembly encountered an inverted or degenerate element."""


class SolverError(RobinStabilityError):
    """Eigen-solver did not reach the requested residual."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class ClusterError(RobinStabilityError):
    """Eigenvalue cluster cannot be isolated from its neighbours."""
