"""Numerical laboratory for a two-patch reaction-diffusion model with an interface."""
from .errors import ConfigError, NumericalError, PatchfrontError, TheoremViolation
from .reaction import Reaction, ReactionClass, classify, mass, rescale, theta_star

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "NumericalError", "PatchfrontError", "TheoremViolation",
    "Reaction", "ReactionClass", "classify", "mass", "rescale", "theta_star",
]
