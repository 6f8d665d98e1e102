"""Exception and warning classes shared across the package."""


class DoublecharError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DoublecharError, ValueError):
    """Raised when array shapes do not match the declared dimension."""


class NontrivialSingularSpace(DoublecharError):
    """Raised when an index is requested but the singular space is not {0}."""


class RealEigenvalue(DoublecharError):
    """Raised when a Hamilton map has an eigenvalue on (or near) the real axis."""


class SingularBlock(DoublecharError):
    """Raised when the mixed block of a phase is not invertible."""


class NotGenerating(DoublecharError):
    """Raised when a canonical map is not generated by a quadratic phase."""


class NotPositive(DoublecharError):
    """Raised when a canonical map does not come from a positive phase."""


class NotStrictlyPsh(DoublecharError):
    """Raised when a weight fails to be strictly plurisubharmonic."""


class Caustic(DoublecharError):
    """Raised when an evolved Lagrangian stops being a graph over the base."""


class NoGoodTime(DoublecharError):
    """Raised when no candidate time certifies a positive weight gap."""


class StepOverflow(DoublecharError):
    """Raised when a trajectory leaves the configured bounded region."""


class BoundaryMass(DoublecharError):
    """Raised when a quadrature integrand is not negligible on the box boundary."""


class NotComparable(DoublecharError):
    """Raised when a quadratic form is not comparable to -|z - w|^2."""


class SupportTruncated(DoublecharError):
    """Raised when a state is not negligible at the edge of its grid."""


class NoConvergence(DoublecharError):
    """Raised when an iterative eigensolver fails to converge."""


class InsufficientData(DoublecharError):
    """Raised when a scaling fit is requested on too little data."""


class TruncationWarning(UserWarning):
    """Issued when a sampled function is not negligible at the grid edge."""


class SchemaError(DoublecharError, ValueError):
    """Raised when a JSON document does not match the expected layout."""
