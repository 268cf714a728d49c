"""Exception hierarchy shared across the package."""


class FracgroundError(Exception):
    """Base class for every error raised by fracground."""


class ParameterError(FracgroundError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InvalidFieldError(FracgroundError, ValueError):
    """A field has the wrong shape or contains non-finite values."""


class DomainError(FracgroundError, ValueError):
    """The (s, N) pair sits on or beyond a pole of a closed form."""


class CalibrationError(FracgroundError):
    """A numerically verified constant disagrees with its closed form."""

    def __init__(self, message, expected=None, measured=None):
        super().__init__(message)
        self.expected = expected
        self.measured = measured


class ResolutionError(FracgroundError):
    """Discretization too coarse for the requested quantity."""


class ConvergenceError(FracgroundError):
    """An extrapolation or iteration failed to settle."""


class RegimeError(FracgroundError):
    """A reduced one-dimensional function has no interior maximum."""


class InfeasibleError(FracgroundError):
    """A field cannot be rescaled onto the Pohozaev manifold."""


class GeometryError(FracgroundError, ValueError):
    """A profile does not fit inside the computational box."""


class AmplitudeError(FracgroundError, FloatingPointError):
    """The primitive overflowed at the given amplitudes."""
