"""Exception hierarchy shared by every stage of the toolkit."""


class WorkloadToolkitError(Exception):
    """Base class for all errors raised by wlsubset."""

    exit_code = 2


class ConfigError(WorkloadToolkitError):
    """Invalid parameters (k range, PC index, threshold...)."""

    exit_code = 1


class DataError(WorkloadToolkitError):
    """Malformed, missing or non-finite input data."""

    exit_code = 2


class NumericalError(WorkloadToolkitError):
    """A numerical procedure could not produce a usable result."""

    exit_code = 3


class ExpressionError(DataError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnboundIdentifierError(ExpressionError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier {name!r}")
        self.name = name


class EvaluationDivisionError(ExpressionError):
    def __init__(self, expression: str):
        super().__init__(f"division by zero in {expression!r}")
        self.expression = expression


class ConvergenceError(NumericalError):
    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} did not converge within {cap} iterations")
        self.cap = cap
