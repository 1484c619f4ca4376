"""Exception hierarchy.

Everything raised deliberately by the package derives from `GrassavgError`.
`NumericalError` subclasses map to CLI exit code 3, `ConfigError` subclasses
to exit code 2.
"""


class GrassavgError(Exception):
    pass


class ConfigError(GrassavgError, ValueError):
    pass


class NumericalError(GrassavgError, ArithmeticError):
    pass


class InvalidInput(ConfigError):
    pass


class InvalidConfig(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, *, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class RankDeficient(NumericalError):
    def __init__(self, message, columns=None):
        super().__init__(message)
        # (start, stop) range of columns found to be dependent
        self.columns = columns


class NearSingular(NumericalError):
    pass


class NumericalDrift(NumericalError):
    pass


class GeodesicUndefined(NumericalError):
    pass


class NotHorizontal(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, grad_norm=None):
        super().__init__(message)
        self.grad_norm = grad_norm


class BallViolation(NumericalError):
    def __init__(self, message, max_distance=None):
        super().__init__(message)
        self.max_distance = max_distance
