"""Exception hierarchy shared by all modules."""


class HypershiftError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgument(HypershiftError, ValueError):
    """A precondition on an argument was violated."""


class ConfigError(InvalidArgument):
    """Malformed or out-of-range run configuration."""


class HyperbolicityViolation(HypershiftError, ArithmeticError):
    """The unstable derivative is not strictly positive."""


class ConeViolation(HypershiftError, ArithmeticError):
    """Slope transport hit a vanishing denominator."""


class NumericalFailure(HypershiftError, RuntimeError):
    """An iteration failed to converge."""


class HolderFailure(HypershiftError, RuntimeError):
    """Series terms that should decay geometrically did not."""
