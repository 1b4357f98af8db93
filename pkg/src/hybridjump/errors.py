"""Exception types shared across the package."""


class HybridJumpError(Exception):
    """Base class for all package errors."""


class NonFiniteCoefficient(HybridJumpError):
    """A coefficient evaluation returned NaN or infinity."""


class RateBoundViolated(HybridJumpError):
    """The jump rate exceeded its declared bound at some point."""


class QuadratureDivergence(HybridJumpError):
    """Adaptive quadrature exhausted its budget without meeting tolerance."""


class InfiniteMass(HybridJumpError):
    """An operation requiring a finite mark-measure mass met an infinite one."""


class NonPSDCovariance(HybridJumpError):
    """A covariance field produced an eigenvalue below -1e-12."""


class MissingDerivative(HybridJumpError):
    """A derivative beyond the declared oracle order was requested without fallback."""


class RegionMeasureMismatch(HybridJumpError):
    """Two measures that must coincide on a region differ beyond tolerance."""


class EmptySample(HybridJumpError):
    """A statistic was requested on an empty sample."""


class DegenerateFit(HybridJumpError):
    """Rate fitting received indistinguishable or insufficient abscissae."""


class ParameterConstraintViolated(HybridJumpError):
    """Parameters fall outside the validity range of the requested theorem/experiment."""


class ConfigError(HybridJumpError):
    """A run configuration failed schema validation.

    ``field`` carries the dotted path of the offending entry.
    """

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
