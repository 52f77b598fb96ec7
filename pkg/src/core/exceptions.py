"""Error hierarchy shared by the library and the CLI"""
from typing import Optional


class ColaError(Exception):
    """Base class for all toolkit errors; carries the CLI exit code"""

    exit_code: int = 1


class ConfigError(ColaError):
    """Invalid or inconsistent experiment configuration"""

    exit_code = 2


class UnsupportedOperationError(ColaError):
    """Operation not available for this score kind or data mode"""

    exit_code = 2


class CapabilityError(UnsupportedOperationError):
    """A fitted model does not provide the requested prediction handle"""


class SummaryError(ColaError):
    """Records cannot be summarized as requested"""

    exit_code = 2


class DataError(ColaError):
    """Malformed numeric data"""

    exit_code = 3


class InvalidInputError(DataError):
    """Input violates an operation precondition"""


class TagMismatchError(InvalidInputError):
    """Interval and discrete prediction sets were mixed"""


class ParseError(DataError):
    """A file could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ColaError):
    """A numerical routine failed"""

    exit_code = 4


class DegenerateWeightsError(NumericalError):
    """Kernel similarities vanish for every calibration point"""


class CalibrationError(NumericalError):
    """Bandwidth calibration could not reach its target"""
