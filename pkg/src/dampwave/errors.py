"""Exception types raised across the package."""


class DampWaveError(Exception):
    """Base class for all package errors."""


class InvalidRange(DampWaveError, ValueError):
    pass


class InvalidExponents(DampWaveError, ValueError):
    pass


class NonFiniteState(DampWaveError, FloatingPointError):
    """Raised when the state (or a nonlinear term) stops being finite.

    ``time`` is the simulation time of the failing step when known and
    ``last_state`` the last finite :class:`~dampwave.galerkin.PhaseState`.
    """

    def __init__(self, message, time=None, last_state=None):
        super().__init__(message)
        self.time = time
        self.last_state = last_state


class NoConvergence(DampWaveError, RuntimeError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class IndefiniteJacobian(DampWaveError, ValueError):
    pass


class PlateauTooNarrow(DampWaveError, ValueError):
    pass


class ParseError(DampWaveError, ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(DampWaveError, ValueError):
    def __init__(self, key, constraint):
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint
