"""Exception types shared across the package."""


class ContactRomError(Exception):
    """Base class for all package errors."""


class ValidationError(ContactRomError, ValueError):
    """Invalid input data or violated type invariant."""


class NumericalError(ContactRomError):
    """A numerical operation failed (singular factorization, lost definiteness, ...)."""


class SolverConvergenceError(NumericalError):
    """Constrained least-squares solver hit its iteration cap.

    Carries the diagnostics of the final iterate so callers can report
    the residual state at failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class LcpFailure(NumericalError):
    """An LCP solve did not terminate with a solution."""

    def __init__(self, message, status="ray_termination", step=None):
        super().__init__(message)
        self.status = status
        self.step = step


class ConfigError(ContactRomError):
    """Invalid or incomplete experiment configuration."""


class IoFormatError(ContactRomError):
    """Malformed on-disk artifact (matrix file, partition file, trajectory CSV, ...)."""
