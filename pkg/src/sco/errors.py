"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: configuration / input problems exit
with 2, numeric failures with 3.
"""


class SCOError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class ParameterError(SCOError):
    """An argument or configuration value is out of its allowed range."""

    exit_code = 2


class DataValidationError(SCOError):
    """Input data violates an invariant (non-finite entries, bad shapes)."""

    exit_code = 2


class DimensionError(SCOError):
    """Operands have incompatible shapes."""

    exit_code = 2


class NumericFailure(SCOError):
    """A numeric routine produced non-finite values."""

    exit_code = 3
