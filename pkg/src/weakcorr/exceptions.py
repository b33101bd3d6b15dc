"""Exception hierarchy.

The CLI maps these onto exit codes: configuration/usage/input problems exit
with 1, numerical invariant violations exit with 2.
"""


class WeakCorrError(Exception):
    """Base class for all library errors."""


class ConfigurationError(WeakCorrError, ValueError):
    """Invalid grid, physics parameters, state parameters or run config."""


class UsageError(WeakCorrError, ValueError):
    """A function was called with an argument outside its contract."""


class InputFormatError(WeakCorrError, ValueError):
    """A wavefunction or config file could not be parsed."""


class UnsupportedError(WeakCorrError, NotImplementedError):
    """The requested operation is not available for this kind of state."""


class NumericalError(WeakCorrError, ArithmeticError):
    """Base class for errors that signal a broken numerical invariant."""


class NumericalDomainError(NumericalError):
    """Non-finite values where finite ones are required."""


class DegenerateStateError(NumericalError):
    """Too few grid points carry enough probability to be analyzed."""


class NumericalConsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""


class InvariantViolation(NumericalError):
    """A quantity that must be strictly positive (or zero) is not."""
