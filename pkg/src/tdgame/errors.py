"""Exception types raised across the package."""


class GameError(Exception):
    """Base class for all domain errors."""


class DimensionError(GameError, ValueError):
    """Point or set dimensions do not agree."""


class ValidationError(GameError, ValueError):
    """Invalid construction parameters."""


class SolverError(GameError):
    """An iterative solver did not converge.

    The last residual is kept on ``residual`` so callers can decide
    whether the partial answer is usable.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class RegionError(GameError):
    """A regime-specific routine was called in the wrong winning region."""


class DegenerateError(GameError):
    """A direction or normal is undefined (zero-length vector)."""


class SimulationError(GameError):
    """Strategy evaluation failed during a simulation step."""

    def __init__(self, message, step):
        super().__init__(f"step {step}: {message}")
        self.step = step
