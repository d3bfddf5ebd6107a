"""Exception types shared across the package."""


class FFDError(Exception):
    """Base class for errors raised by ffdmesh."""


class MeshFormatError(FFDError, ValueError):
    """A mesh file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateGeometryError(FFDError, ValueError):
    """Input geometry is degenerate for the requested operation."""


class ParameterizationError(FFDError, RuntimeError):
    """Lattice parameterization did not converge for some vertex."""

    def __init__(self, message: str, worst_vertex: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.worst_vertex = worst_vertex
        self.residual = residual


class SolverError(FFDError, RuntimeError):
    """An iterative or direct solver failed. Carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class GimbalLockError(FFDError, ValueError):
    """Euler angle extraction is ill-defined at |pitch| = 90 degrees."""


class RankDeficiencyWarning(UserWarning):
    """Unregularized fit with control points that influence no vertex."""
