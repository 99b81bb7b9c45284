"""Exception hierarchy shared by every module in the package."""


class DistMetricError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(DistMetricError):
    """A file does not conform to its declared on-disk format."""


class DataError(DistMetricError):
    """Structurally valid input carries values that violate an invariant."""


class IoError(DistMetricError):
    """An underlying read or write failed."""


class DomainError(DistMetricError):
    """An argument lies outside an operation's domain."""


class NumericalError(DistMetricError):
    """A numerical routine failed to produce a trustworthy result."""


class InsufficientData(DistMetricError):
    """Too few samples or systems to evaluate the requested quantity."""


class CoverageError(DistMetricError):
    """Every token on one side of a pair is out of vocabulary."""
