"""Exception types raised by the library, each carrying the CLI exit code it maps to."""


class PulseIVError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class UsageError(PulseIVError):
    exit_code = 2


class DataError(PulseIVError):
    exit_code = 3


class NumericalError(PulseIVError):
    exit_code = 4


class DualInfeasible(PulseIVError):
    """TSLS is rejected and no fallback estimator was requested."""

    exit_code = 5


class InvalidSpec(UsageError, ValueError):
    pass


class InvalidConfig(UsageError, ValueError):
    pass


class InvalidDesign(UsageError, ValueError):
    def __init__(self, name: str, valid: list[str]):
        self.name = name
        self.valid = valid
        super().__init__(f"Unknown design '{name}'. Valid designs: {', '.join(valid)}")


class InvalidProbability(UsageError, ValueError):
    pass


class MissingColumn(DataError):
    def __init__(self, column: str, suggestion: str | None = None):
        self.column = column
        self.suggestion = suggestion
        message = f"Column '{column}' not found in data"
        if suggestion:
            message += f" (did you mean '{suggestion}'?)"
        super().__init__(message)


class NonNumericCell(DataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"Non-numeric value '{value}' in row {row}, column '{column}'")


class MissingValue(DataError):
    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f"Missing value in row {row}, column '{column}'")


class InsufficientRows(DataError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class SingularGram(NumericalError):
    def __init__(self, matrix: str, rcond: float):
        self.matrix = matrix
        self.rcond = rcond
        super().__init__(f"Gram matrix {matrix} is numerically singular (rcond={rcond:.3e})")


class SingularPopulationGram(NumericalError):
    def __init__(self, matrix: str, rcond: float):
        self.matrix = matrix
        self.rcond = rcond
        super().__init__(f"Population moment matrix {matrix} is singular (rcond={rcond:.3e})")


class UnidentifiedAtOne(NumericalError):
    pass


class UnderIdentified(NumericalError):
    pass


class InfeasibleConstraint(NumericalError):
    pass


class ZeroResidual(NumericalError):
    pass


class DegenerateResidual(NumericalError):
    pass


class NonMonotoneDetected(NumericalError):
    pass


class OutOfDomain(NumericalError, ValueError):
    pass


class NonStationary(NumericalError):
    def __init__(self, spectral_radius: float):
        self.spectral_radius = spectral_radius
        super().__init__(f"Structural matrix has spectral radius {spectral_radius:.6g} >= 1")


class DivisionByZero(NumericalError, ZeroDivisionError):
    pass
