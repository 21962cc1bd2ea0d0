"""Exception hierarchy.

Numeric failures derive from :class:`NumericError` so the command line can map
them to a single exit code.
"""


class QSLError(Exception):
    pass


class NumericError(QSLError):
    pass


class NonHermitianInput(NumericError, ValueError):
    pass


class NonUnitaryInput(NumericError, ValueError):
    pass


class DimensionMismatch(NumericError, ValueError):
    pass


class InvalidStepCount(NumericError, ValueError):
    pass


class ZeroDenominator(NumericError, ZeroDivisionError):
    pass


class UnsupportedDimension(QSLError, ValueError):
    pass


class UnknownPreset(QSLError, KeyError):
    pass


class InvalidParams(QSLError, ValueError):
    pass


class ConfigError(QSLError):
    pass
