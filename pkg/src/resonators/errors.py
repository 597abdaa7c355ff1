"""Exception and warning types raised across the package."""


class ResonatorError(ValueError):
    """Base class for caller-misuse and computation errors."""


class InvalidDims(ResonatorError):
    pass


class InvalidGap(ResonatorError):
    pass


class InvalidCutoff(ResonatorError):
    pass


class AsymmetricOffsets(ResonatorError):
    pass


class GapTooLarge(ResonatorError):
    pass


class DimensionMismatch(ResonatorError):
    pass


class SingularSystem(ResonatorError):
    pass


class NotSymmetric(ResonatorError):
    pass


class CountMismatch(ResonatorError):
    """A closed-form spectral group did not capture its multiplicity of eigenvalues."""


class DegenerateGap(ResonatorError):
    pass


class MissingCapacitance(ResonatorError):
    pass


class IndexOutOfRange(ResonatorError, IndexError):
    pass


class ResidualTooLarge(ResonatorError):
    pass


class SingularModeMatrix(ResonatorError):
    pass


class PointInsideResonator(ResonatorError):
    pass


class SpheresOverlap(ResonatorError):
    pass


class TableMismatch(ResonatorError):
    pass


class ResolutionWarning(UserWarning):
    """The boundary mesh is coarser than the inter-resonator gap."""


class NearResonance(UserWarning):
    """Driving frequency is within the conditioning floor of a resonance."""
