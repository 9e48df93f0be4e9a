"""Exception families shared by all modules.

Three families map onto the CLI exit codes: configuration problems (2),
numeric preconditions (3), and tolerance failures (4).
"""


class CalcError(Exception):
    """Base class for everything raised on purpose by this package."""


class ConfigError(CalcError):
    """Malformed input: bad config key, unparsable file, bad function spec."""


class PreconditionError(CalcError):
    """A documented numeric precondition does not hold for the given inputs."""


class DimensionCapError(PreconditionError):
    """A tensor assembly would exceed the configured dimension cap."""


class NearSingularError(PreconditionError):
    """Resolvent requested at a point too close to the spectrum."""


class ContourTooCloseError(PreconditionError):
    """An eigenvalue sits within the guard band of a quadrature circle."""


class ClusterSeparationError(PreconditionError):
    """Eigenvalue clusters cannot be separated at the requested tolerance."""


class DomainError(PreconditionError):
    """Function evaluated or integrated outside its analyticity domain."""


class ToleranceError(CalcError):
    """A computation finished but missed its accuracy contract."""


class QuadratureError(ToleranceError):
    """Contour quadrature failed its node-doubling stability check."""


class DecompositionError(ToleranceError):
    """Spectral decomposition residuals exceed the requested tolerance."""


class TailBoundError(ToleranceError):
    """Power-series tail cannot be certified below the requested bound."""
