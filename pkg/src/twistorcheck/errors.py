"""Exception hierarchy for twistorcheck."""


class TwistorCheckError(Exception):
    """Base class for all errors raised by the engine."""


class OutOfChart(TwistorCheckError):
    """A point lies outside the chart box (or inside the step margin)."""


class DimensionMismatch(TwistorCheckError):
    pass


class DimensionError(TwistorCheckError):
    """An operation that only makes sense in a fixed dimension was misused."""


class DegenerateEigenspace(TwistorCheckError):
    pass


class FrameDegenerate(TwistorCheckError):
    pass


class NotAlgebraIso(TwistorCheckError):
    """A 3x3 map between quaternionic triples is not in SO(3)."""


class NonPositiveFactor(TwistorCheckError):
    pass


class BadType(TwistorCheckError):
    pass


class ConfigError(TwistorCheckError):
    """Invalid scenario description."""


class InconclusiveThresholds(TwistorCheckError):
    """Residuals fall between the 'vanishes' and 'nonzero' thresholds."""
