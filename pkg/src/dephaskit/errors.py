"""Exception types shared across the package."""


class DephaskitError(Exception):
    """Base class for all package errors."""


class ContractViolationError(DephaskitError):
    """An input violated a documented precondition (e.g. non-Hermitian matrix)."""


class DimensionMismatchError(DephaskitError):
    """Operands have incompatible dimensions."""


class DomainError(DephaskitError):
    """A numeric argument is outside its admissible range."""


class ValidationError(DephaskitError):
    """A value object failed its invariants."""


class SpectrumParseError(DephaskitError):
    """Malformed spectrum CSV. Carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class InsufficientDataError(DephaskitError):
    """Too few data points to proceed."""


class UnknownPresetError(DephaskitError):
    """Requested tilt-angle preset does not exist."""


class FitError(DephaskitError):
    """Nonlinear least-squares fit diverged."""


class SolverError(DephaskitError):
    """Cone solver failed to converge. Carries the last residuals."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonPhysicalChannelError(DephaskitError):
    """Tomographic reconstruction produced a non-completely-positive map."""
