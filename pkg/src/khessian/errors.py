class KHessianError(Exception):
    """Base class for all solver-suite errors."""


class GridError(KHessianError, ValueError):
    pass


class InvalidOrder(KHessianError, ValueError):
    pass


class ConfigError(KHessianError, ValueError):
    pass


class LinearSolveError(KHessianError):
    """A linear solve missed its tolerance; ``residual`` is what it reached."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class SolverBreakdown(KHessianError):
    pass


class IterationError(KHessianError):
    """A nonlinear iteration could not proceed."""
