"""Exception types raised across the package."""


class ToralGibbsError(Exception):
    """Base class for all package errors."""


class NonHyperbolic(ToralGibbsError, ValueError):
    """Matrix has an eigenvalue on the unit circle."""


class NonUnimodular(ToralGibbsError, ValueError):
    """Matrix determinant is not +1 or -1."""


class DegeneratePeriod(ToralGibbsError, ValueError):
    """det(A^n - I) vanishes, so the fixed-point set is not finite."""


class ConstructionFailed(ToralGibbsError, RuntimeError):
    """A Markov partition failed one of its geometric checks."""


class EmptyCylinder(ToralGibbsError, ValueError):
    """A word decodes to an empty region."""


class NotMixing(ToralGibbsError, ValueError):
    """Transition matrix is not primitive."""


class NoConvergence(ToralGibbsError, RuntimeError):
    """Power iteration did not converge."""


class ZeroMassCylinder(ToralGibbsError, ValueError):
    """A cylinder needed as a denominator has zero weight."""


class OutsideA0(ToralGibbsError, ValueError):
    """Point does not lie in the interior of the distinguished rectangle."""


class BoundaryCode(ToralGibbsError, ValueError):
    """Point has more than one code at the working depth."""


class GridTooCoarse(ToralGibbsError, ValueError):
    """Pressure curve grid step is too large for a derivative estimate."""


class ConditionDegenerate(ToralGibbsError, ValueError):
    """Base potential does not separate the fixed point from the period-3 orbit."""


class NonConvexCurve(ToralGibbsError, ValueError):
    """A sampled pressure curve violates convexity beyond tolerance."""


class IoFailure(ToralGibbsError, OSError):
    """A report could not be written or read."""
