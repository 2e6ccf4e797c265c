"""Exception and warning types raised across the package."""


class AperiodicaError(Exception):
    """Base class for computation errors (CLI exit status 3)."""


class EmptySet(AperiodicaError):
    pass


class DegenerateSample(AperiodicaError):
    pass


class CutoffTooLarge(AperiodicaError):
    pass


class ShiftTooLarge(AperiodicaError):
    pass


class SingularBasis(AperiodicaError):
    pass


class ProjectionNotInjective(AperiodicaError):
    """The physical projection maps a nonzero lattice vector to (nearly) zero."""

    def __init__(self, vector):
        self.vector = tuple(int(v) for v in vector)
        super().__init__(f"integer vector {self.vector} has zero physical part")


class EnumerationTooLarge(AperiodicaError):
    pass


class UnsupportedShapeDim(AperiodicaError):
    pass


class InvalidWindow(AperiodicaError):
    pass


class NotPrimitive(AperiodicaError):
    pass


class WordTooLong(AperiodicaError):
    pass


class DimensionMismatch(AperiodicaError):
    pass


class IncompatibleSamples(AperiodicaError):
    pass


class InconsistentDimension(AperiodicaError):
    pass


class NoAscent(AperiodicaError):
    """Peak refinement ended on the boundary of the search box.

    The best point found is kept on the exception so callers can still use it.
    """

    def __init__(self, k, intensity):
        self.k = k
        self.intensity = intensity
        super().__init__("maximum of |c_n|^2 lies on the search-box boundary")


class DensenessSuspect(UserWarning):
    """Internal images of the searched lattice vectors leave a visible gap."""
