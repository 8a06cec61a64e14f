"""Numerical checks of generalized quaternionic Kaehler geometry and twistor integrability."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadType,
    ConfigError,
    DegenerateEigenspace,
    DimensionError,
    DimensionMismatch,
    FrameDegenerate,
    InconclusiveThresholds,
    NonPositiveFactor,
    NotAlgebraIso,
    OutOfChart,
    TwistorCheckError,
)
