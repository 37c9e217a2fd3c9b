"""Exception types shared across the package."""


class KposimError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(KposimError):
    """Operands built on Fock spaces of different dimension."""


class TruncationError(KposimError):
    """State leaks past the Fock truncation beyond tolerance."""


class DivergenceError(KposimError):
    """Integration produced a state too far from unit trace."""


class StepSizeError(KposimError):
    """Integration step violates its step-size precondition."""


class FitWindowError(KposimError):
    """Too few samples qualify for the decay-rate fit."""


class NonPositiveSignal(KposimError):
    """Fit input crosses zero where a positive signal is required."""


class NonPositiveRate(KposimError):
    """A rate that must be positive is zero or negative."""


class DomainError(KposimError):
    """Arguments outside the mathematical domain of a formula."""


class WindowError(KposimError):
    """Averaging/scoring window does not fit into the record."""
