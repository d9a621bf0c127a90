"""Exception types shared across the package."""


class InvalidShapeError(ValueError):
    """Shape primitive cannot be realized in the periodic unit cell."""


class CFLError(ValueError):
    """Requested transport step exceeds the stability bound."""


class GridMismatchError(ValueError):
    """Fields defined on different grids were combined."""


class SolverError(RuntimeError):
    """Linear solver failed to reach the requested residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    """Run configuration is malformed or violates a physical bound."""
