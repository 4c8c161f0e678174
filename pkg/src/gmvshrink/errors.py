"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GMVError(Exception):
    exit_code = 1


class ConfigurationError(GMVError, ValueError):
    """Invalid parameters, unsupported regime, or out-of-domain arguments."""

    exit_code = 2


class DataError(GMVError, ValueError):
    """Malformed or non-finite input data, or inconsistent dimensions."""

    exit_code = 3


class DegenerateError(GMVError, ArithmeticError):
    """A quantity needed by an estimator vanished (zero denominator, singular matrix)."""

    exit_code = 4
