"""Exception hierarchy."""


class TameLevyError(Exception):
    pass


class ConfigError(TameLevyError, ValueError):
    pass


class WildRamification(ConfigError):
    pass


class NonDivisibleTower(ConfigError):
    pass


class NotIncreasing(ConfigError):
    pass


class LevelMismatch(TameLevyError, ValueError):
    pass


class TamenessViolated(TameLevyError, ArithmeticError):
    pass


class OutOfBall(TameLevyError, ValueError):
    pass


class Unresolvable(TameLevyError, ValueError):
    """A distance below the resolution M(n)^-1 of the working level was requested."""


class CapExceeded(TameLevyError, RuntimeError):
    pass


class EnumerationCapExceeded(CapExceeded):
    pass


class ZeroCoset(TameLevyError, ValueError):
    pass


class NonPositiveTime(TameLevyError, ValueError):
    pass


class InvalidLevels(TameLevyError, ValueError):
    pass


class ShellOutOfRange(TameLevyError, ValueError):
    pass


class AlphaTooSmall(TameLevyError, ValueError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class Censored(TameLevyError, RuntimeError):
    pass


class ZeroBn(TameLevyError, ValueError):
    pass


class NumericalFailure(TameLevyError, ArithmeticError):
    def __init__(self, check, message=""):
        super().__init__(f"{check}: {message}" if message else check)
        self.check = check


class PrecisionLoss(TameLevyError, ArithmeticError):
    """Too few p-adic digits survive to read a value out exactly."""
