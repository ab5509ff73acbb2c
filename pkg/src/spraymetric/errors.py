"""Exception hierarchy shared by every module."""


class SprayMetricError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SprayMetricError, ValueError):
    """An evaluation left the domain of a field or function."""


class DimensionMismatch(SprayMetricError, ValueError):
    pass


class DivisionByZero(DomainError, ZeroDivisionError):
    pass


class ParseError(SprayMetricError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ArityError(SprayMetricError, ValueError):
    pass


class HomogeneityError(SprayMetricError, ValueError):
    pass


class MetricError(SprayMetricError, ValueError):
    pass


class AnnihilationError(SprayMetricError, ValueError):
    """A multiplier fails h.y = 0 where that is required."""


class StepFailure(SprayMetricError, RuntimeError):
    pass


class DegenerateRay(DomainError):
    """The ray lies outside the genuine-spiral chart."""


class ConfigError(SprayMetricError, ValueError):
    pass
