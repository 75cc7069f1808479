"""Exception hierarchy shared by all nvmirror modules."""


class NVMirrorError(Exception):
    """Base class for every error raised by this package."""


class ParseError(NVMirrorError, ValueError):
    """A data file row could not be parsed."""


class ValidationError(NVMirrorError, ValueError):
    """Parsed data violates a physical or structural invariant."""


class OutOfRange(NVMirrorError, ValueError):
    """A wavelength lies outside the span of a tabulated material."""


class DegenerateInterface(NVMirrorError, ArithmeticError):
    """A Fresnel denominator vanished."""


class QuadratureFailure(NVMirrorError, ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


class EmptyAxisList(NVMirrorError, ValueError):
    pass


class DivisionDegenerate(NVMirrorError, ArithmeticError):
    """Reference collected power underflowed."""


class CoverageError(NVMirrorError, ValueError):
    """A reference spectrum does not span the requested wavelength grid."""


class ZeroSpectrum(NVMirrorError, ValueError):
    def __init__(self, message, d=None):
        super().__init__(message)
        self.d = d


class GridMismatch(NVMirrorError, ValueError):
    pass


class ZeroReference(NVMirrorError, ValueError):
    pass


class ColumnTooShort(NVMirrorError, ValueError):
    pass


class NoFringes(NVMirrorError, ValueError):
    pass


class PoorFitWarning(UserWarning):
    """Fringe alignment residual exceeded the configured threshold."""
