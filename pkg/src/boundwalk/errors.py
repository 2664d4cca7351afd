"""Exception types raised by the walk, spectral and molecule modules."""


class WalkError(ValueError):
    """Base class for invalid inputs to the walk machinery."""


class NotUnitaryError(WalkError):
    """A matrix that must be unitary fails the unitarity check."""


class ClearanceError(WalkError):
    """An absorbing window is too small for the requested evolution."""


class SpectralProximityError(WalkError):
    """The spectral parameter ``z`` lies in (or too close to) a band."""


class SingularDefectError(WalkError):
    """The defect operator cannot be inverted reliably."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number


class EigenConditionError(WalkError):
    """A defect-space vector does not satisfy ``R(z)(1 - G) psi = psi``."""


class ConstraintError(WalkError):
    """A dispersion branch is forbidden by the pole-selection constraint."""


class DomainError(WalkError):
    """Arguments lie outside the domain of a closed-form expression."""
