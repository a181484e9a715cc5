"""Exception hierarchy.

Every error carries a stable ``code`` string so the command line front end can
emit machine-readable failures.
"""


class TempoError(Exception):
    code = "ERROR"


class ValidationError(TempoError, ValueError):
    code = "VALIDATION"


class ParseError(TempoError, ValueError):
    code = "PARSE"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(TempoError, ValueError):
    code = "DIMENSION"


class NotInvertibleOverR(TempoError, ArithmeticError):
    """Raised when some slice of a ring matrix is singular."""

    code = "NOT_INVERTIBLE"

    def __init__(self, pair, message=None):
        i, j = pair
        super().__init__(message or f"slice ({i}, {j}) is singular; matrix is not invertible over R")
        self.pair = (int(i), int(j))


class NotDiagonalizableOverR(TempoError, ArithmeticError):
    code = "NOT_DIAGONALIZABLE"

    def __init__(self, pair, cond):
        i, j = pair
        super().__init__(f"slice ({i}, {j}) is numerically defective (eigenvector condition {cond:.3g})")
        self.pair = (int(i), int(j))
        self.cond = float(cond)


class NumericalError(TempoError, ArithmeticError):
    code = "NUMERICAL"

    def __init__(self, message, frame=None):
        super().__init__(message)
        self.frame = frame


class ParameterError(TempoError, ValueError):
    code = "PARAMETER"


class BudgetExceeded(TempoError, RuntimeError):
    code = "BUDGET"
