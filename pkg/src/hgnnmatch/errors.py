class ShapeError(ValueError):
    """Operand shapes do not conform for the requested op."""


class DegenerateRowError(ValueError):
    def __init__(self, row: int, message: str | None = None):
        self.row = row
        super().__init__(message or f"softmax row {row} is fully masked")


class TapeError(RuntimeError):
    """Internal inconsistency in a recorded computation tape."""


class DataError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NumericalAbort(RuntimeError):
    """Raised when training produces a non-finite loss."""


class UsageError(ValueError):
    """Bad command-line usage or unresolvable configuration."""
