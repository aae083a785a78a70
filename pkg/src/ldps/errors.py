"""Exception hierarchy.

Two families: ``ConfigError`` for invalid inputs (CLI exit code 2) and
``NumericError`` for numerical failures (CLI exit code 3).
"""


class LdpsError(Exception):
    pass


class ConfigError(LdpsError, ValueError):
    pass


class NumericError(LdpsError, ArithmeticError):
    pass


class NonConvergence(NumericError):
    pass


class BelowCrossover(NumericError):
    pass


class CoefficientSolveFailed(NumericError):
    pass


class InconsistentRegimes(NumericError):
    pass


class NormalizerUnderflow(NumericError):
    pass


class ZeroDenominator(NumericError):
    pass


class BracketFailure(NumericError):
    pass


class SecondDerivativeUnavailable(NumericError):
    pass


class WindowOverflow(NumericError):
    pass


class RegimeMismatch(NumericError):
    pass


class TailUnderflow(NumericError):
    def __init__(self, message: str, censored_value: float):
        super().__init__(message)
        self.censored_value = censored_value


class SupportTooLarge(NumericError):
    pass
