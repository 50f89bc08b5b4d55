"""Exception hierarchy shared by all otray modules."""


class OtrayError(Exception):
    """Base class for all library errors."""


class AntipodalError(OtrayError):
    """Logarithm requested at or beyond the cut locus of the base point."""


class DegenerateGradientError(OtrayError):
    """Distance gradient evaluated at one of its two singular points."""


class UnbalancedError(OtrayError):
    """Source and target measures carry different total mass."""


class InfeasibleError(OtrayError):
    """LP solver breakdown on a problem that should always be feasible."""


class AmbiguousDirectionError(OtrayError):
    """Ray direction undefined: the point sits on a cell boundary or apex."""


class NotInTransportSetError(OtrayError):
    """No transport ray of positive length passes through the point."""


class EmptyPartitionError(OtrayError):
    """No ray clears the endpoint-separation margin."""


class InsufficientRayLengthError(OtrayError):
    """Some base rays do not cover the requested window plus margin."""

    def __init__(self, message, offending_indices=()):
        super().__init__(message)
        self.offending_indices = tuple(offending_indices)


class OutOfWindowError(OtrayError):
    """Flow parameter outside the cylinder window."""


class SingularFrameError(OtrayError):
    """Tangent frame of the base is degenerate at the requested point."""


class DomainError(OtrayError):
    """Jacobian formula evaluated past the cone apex (t >= r)."""


class WindowOrderError(OtrayError):
    """Window parameters violate h- < s <= t < h+ (or h- < 0 < h+)."""


class FieldMismatchError(OtrayError):
    """Density field was built on a different cylinder."""


class OverlapError(OtrayError):
    """Cylinder interiors overlap beyond tolerance."""


class NotOnEdgeError(OtrayError):
    """Point is not on the requested Voronoi cell boundary."""


class EdgeIntersectsCylinderError(OtrayError):
    """A Voronoi boundary crosses a cylinder assumed single-cone."""


class ParseError(OtrayError):
    """Scenario file cannot be parsed or carries unknown fields."""


class ValidationError(OtrayError):
    """Scenario violates a structural invariant."""


class UnknownCheckError(OtrayError):
    """Check id not in the registered set."""


class IoError(OtrayError):
    """Report emission failed."""
