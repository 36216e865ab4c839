from typing import Optional


class PenexError(Exception):
    """Base class for all workbench errors"""


class DimensionError(PenexError, ValueError):
    """Operand shapes do not fit the operation"""


class LabelIndexError(PenexError, IndexError):
    """A class label lies outside [0, K)"""


class ContractError(PenexError):
    """A precondition of an operation was violated"""


class ParameterError(PenexError, ValueError):
    """A hyperparameter is outside its admissible range"""


class DatasetParseError(PenexError, ValueError):
    """A CSV dataset could not be parsed"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DivergenceError(PenexError, ArithmeticError):
    """A loss left the representable range of double precision"""


class OracleFailure(PenexError):
    """A verification oracle failed to produce an answer"""
