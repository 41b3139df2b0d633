"""Exception types raised across the package."""


class GmbFusionError(Exception):
    """Base class for all package errors."""


class DegenerateCovarianceError(GmbFusionError, ValueError):
    """A covariance is singular, non-symmetric or too badly conditioned."""


class InvalidExponentError(GmbFusionError, ValueError):
    pass


class EmptyDensityError(GmbFusionError, ValueError):
    pass


class InvalidDensityError(GmbFusionError, ValueError):
    """A multi-object density violates its normalization or label invariants."""


class InvalidMomentError(GmbFusionError, ValueError):
    pass


class InvalidParameterError(GmbFusionError, ValueError):
    pass


class DegenerateFusionError(GmbFusionError, ArithmeticError):
    """Every fusion weight vanished, so the fused density cannot be normalized."""


class FilterDivergenceError(GmbFusionError, ArithmeticError):
    """The local filter lost every hypothesis during an update."""


class SchemaError(GmbFusionError, ValueError):
    """A scenario, experiment or CSV file does not follow its documented schema."""


class TruncationError(GmbFusionError, ValueError):
    """A density has mass beyond the largest cardinality a grid can hold."""
