"""Exception types raised across the package."""


class IrrPertError(Exception):
    """Base class for every error raised by irrpert."""


class NumericalError(IrrPertError):
    """A decomposition or iteration failed its own residual check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AmbiguityError(IrrPertError):
    """An interval endpoint sits inside an eigenvalue cluster."""


class StructuralError(IrrPertError):
    """An input violates a structural precondition of a construction."""


class PreconditionError(StructuralError):
    pass


class RetryExhausted(NumericalError):
    """A seeded randomized search ran out of attempts."""


class CertificationError(IrrPertError):
    """A construction finished but its output did not certify."""

    def __init__(self, message, commutant_dim=None, margin=None):
        super().__init__(message)
        self.commutant_dim = commutant_dim
        self.margin = margin


class BudgetError(IrrPertError):
    """A perturbation exceeded its trace-norm budget."""
