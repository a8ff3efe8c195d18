"""Exception and warning types shared across the package."""


class FastgatesError(Exception):
    """Base class for all package errors."""


class NotStable(FastgatesError):
    """Operating point lies outside the first stability region."""


class NoConvergence(FastgatesError):
    """Iterative solver exhausted its depth or iteration budget."""


class TruncationFailure(FastgatesError):
    """Fourier coefficient ladder did not decay below tolerance within the cap."""


class CalibrationFailure(FastgatesError):
    """Trap calibration could not place a mode at its target frequency."""


class InvalidSequence(FastgatesError, ValueError):
    """Kick sequence violates ordering, spacing, or gate-time constraints."""


class NoCandidates(FastgatesError):
    """Stage-1 search produced no integer vector better than the empty gate."""


class InfeasibleSpacing(FastgatesError):
    """Kick count times the minimum spacing does not fit in the gate time."""


class NoSolution(FastgatesError):
    """No candidate reached the configured fidelity floor.

    The ranked best-effort list is attached as ``solutions``.
    """

    def __init__(self, message, solutions=()):
        super().__init__(message)
        self.solutions = list(solutions)


class IntegratorFailure(FastgatesError):
    """ODE integration failed to reach the requested time."""


class RouteMismatch(FastgatesError):
    """Quadrature and boundary action-phase routes disagree beyond tolerance."""


class DomainError(FastgatesError, ValueError):
    """Input outside the mathematical domain of the operation."""


class RecalibrationFailure(FastgatesError):
    """Per-sample trap recalibration failed inside a noise ensemble."""


class ConfigError(FastgatesError, ValueError):
    """Malformed configuration file or CLI argument combination."""


class TruncationWarning(UserWarning):
    """Neglected probability mass beyond the stratification cutoff is large."""
