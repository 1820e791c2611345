"""Exception hierarchy shared by all curvemag modules."""


class CurvemagError(Exception):
    """Base class for library errors."""


class GeometryError(CurvemagError):
    """Curve is not regular, or its Frenet frame is undefined."""


class ValidityError(CurvemagError):
    """Tube thickness outside the range where the chart is a diffeomorphism."""


class NormalizationError(CurvemagError):
    """A vector that must be unit length (or an area that must be 1) is not."""


class ConstraintError(CurvemagError):
    """Parameters violate an algebraic constraint of an analytic solution."""


class GridMismatchError(CurvemagError):
    """Field and curve are sampled on different grids."""


class ConfigError(CurvemagError):
    """Invalid run configuration."""
