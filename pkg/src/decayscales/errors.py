"""Exception hierarchy shared by every module."""

import builtins


class DecayScalesError(Exception):
    """Base class for library errors."""


class DomainError(DecayScalesError, ValueError):
    pass


class OverflowError(DecayScalesError, builtins.OverflowError):
    pass


class MonotonicityError(DecayScalesError):
    pass


class BracketError(DecayScalesError):
    pass


class IntegrabilityError(DecayScalesError):
    pass


class ZeroFunctionError(DecayScalesError):
    pass


class ConvergenceError(DecayScalesError):
    pass


class NonConvergence(ConvergenceError):
    pass


class TailError(DecayScalesError):
    pass


class RegimeParameterError(DecayScalesError, ValueError):
    pass


class LimitError(DecayScalesError):
    pass


class WindowError(DecayScalesError):
    pass


class PreconditionError(DecayScalesError, ValueError):
    pass


class SpecError(DecayScalesError, ValueError):
    """Malformed expression, model or experiment description."""
