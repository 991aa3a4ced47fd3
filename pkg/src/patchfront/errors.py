"""Exception hierarchy shared by all modules."""


class PatchfrontError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(PatchfrontError, ValueError):
    """Malformed or invalid configuration or model data."""


class NumericalError(PatchfrontError, ArithmeticError):
    """A computation failed: CFL violation, NaN, blow-up, non-convergence."""


class TheoremViolation(PatchfrontError):
    """The hypotheses of an existence statement hold but no object was found."""
