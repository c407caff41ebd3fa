"""Exception hierarchy. Each class carries the CLI error category and exit code."""


class VbcError(Exception):
    category = "internal"
    exit_code = 4


class ConfigError(VbcError, ValueError):
    category = "config"
    exit_code = 1


class ValidationError(ConfigError):
    """A matrix, instrument or table failed one of its structural invariants."""


class InsufficientDataError(VbcError):
    category = "data"
    exit_code = 2


class NumericalError(VbcError, ArithmeticError):
    category = "numerical"
    exit_code = 3
