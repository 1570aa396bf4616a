"""Exception hierarchy shared by the library and the CLI."""


class MagGrabError(Exception):
    """Base class for all errors raised by maggrab."""


class ParallelLines(MagGrabError):
    """Two lines have (numerically) parallel directions."""


class PointOnConductor(MagGrabError):
    """Field requested at a point lying on a conductor."""


class NyquistViolation(MagGrabError):
    """Requested frequency is at or above half the sampling rate."""


class AllAxesBelowFloor(MagGrabError):
    """No axis carries a usable AC amplitude."""


class ZeroField(MagGrabError):
    """A field vector passed to the localizer has zero length."""


class DegenerateParallel(MagGrabError):
    """Field vectors at the two sensors are too close to parallel to triangulate."""

    def __init__(self, angle, alpha_min):
        super().__init__(
            f"angle between field vectors {angle:.4g} rad is below alpha_min {alpha_min:.4g} rad"
        )
        self.angle = angle
        self.alpha_min = alpha_min


class DegenerateGeometry(MagGrabError):
    """Conductor direction passes through the robot base; orientation undefined."""


class IterationLimit(MagGrabError):
    """The approach procedure exceeded its iteration budget."""


class ConfigError(MagGrabError):
    """Scenario configuration is missing or does not match the schema."""


class SchemaError(MagGrabError):
    """A CSV sample file does not match the ``t,bx,by,bz`` layout."""


class LengthMismatch(MagGrabError):
    """Synchronized sample streams have different lengths."""
