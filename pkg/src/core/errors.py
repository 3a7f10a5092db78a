"""
Error hierarchy for the T-KRR engine and its command-line front end
"""

from typing import Optional


class TKRRError(Exception):
    """Base class for every error raised by this package"""


class InvalidParameterError(TKRRError, ValueError):
    """A hyperparameter, flag or argument is outside its admissible range"""


class DomainViolationError(InvalidParameterError):
    """An input lies outside the feature domain [-U, U]; scale it first"""


class ShapeMismatchError(InvalidParameterError):
    """Array shapes or dimension counts disagree"""


class TaskMismatchError(InvalidParameterError):
    """Operation not available for the model's task kind"""


class CapacityError(TKRRError):
    """A dense object would exceed its configured size limit"""

    def __init__(self, what: str, requested: int, limit: int):
        self.requested = requested
        self.limit = limit
        super().__init__(f"{what} needs {requested} entries, limit is {limit}")


class NumericalFailureError(TKRRError):
    """Factorization failed even after jitter escalation"""

    def __init__(self, message: str, jitter: Optional[float] = None):
        self.jitter = jitter
        if jitter is not None:
            message = f"{message} (last jitter {jitter:g})"
        super().__init__(message)


class DataError(TKRRError):
    """Dataset or model file cannot be used"""


class DataParseError(DataError):
    """A CSV cell could not be parsed as a finite number"""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingColumnError(DataError):
    """The requested target column does not exist"""


class ModelFormatError(DataError):
    """A model file is truncated, malformed or internally inconsistent"""


class SchemaVersionError(ModelFormatError):
    """A model file was written with an unsupported schema version"""
