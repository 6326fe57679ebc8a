"""Exception types raised across the package."""


class OdaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(OdaError, ValueError):
    pass


class DomainViolation(OdaError, ValueError):
    """A vector left the domain of the selected divergence."""


class ZeroMass(OdaError, ValueError):
    pass


class EmptySeeds(OdaError, ValueError):
    pass


class DuplicateClassSeed(OdaError, ValueError):
    pass


class UnknownLabel(OdaError, ValueError):
    pass


class NotInitialized(OdaError, RuntimeError):
    pass


class NotClassifier(OdaError, RuntimeError):
    """A label-dependent operation was requested on a clustering model."""


class ScheduleExhausted(OdaError, RuntimeError):
    pass


class CapacityReached(OdaError, RuntimeError):
    pass


class ConfigError(OdaError, ValueError):
    """Invalid configuration. ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class DataError(OdaError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, line, column, message="non-numeric value"):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class EmptyDataset(DataError):
    pass


class TooFewSamples(DataError):
    pass
