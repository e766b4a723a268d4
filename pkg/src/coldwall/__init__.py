"""Boundary return distribution of a hard-sphere gas driven into a wall by a
cold (monokinetic) background: collision-count series, its bounds, and a
free-flight simulator that checks them."""

from .errors import (
    ColdwallError,
    ConfigError,
    DegenerateState,
    DivergentIntegral,
    GrazingState,
    InvalidArgument,
    MissingInputs,
    QuadratureFailure,
    SingularConfiguration,
)
from .geometry import ProblemParams

__version__ = "0.1.0"
