"""Exceptions raised across the package.

Each class carries a short ``code`` that the command line maps to an exit
status and prints in diagnostics.
"""


class SocoPartError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class InfeasibleOrUnbounded(SocoPartError):
    code = "INFEASIBLE_OR_UNBOUNDED"


class MaxIterations(SocoPartError):
    code = "MAX_ITERATIONS"


class NumericalBreakdown(SocoPartError):
    code = "NUMERICAL_BREAKDOWN"


class InconsistentBlock(SocoPartError):
    code = "INCONSISTENT_BLOCK"


class NotStrictlyComplementary(SocoPartError):
    code = "NOT_STRICTLY_COMPLEMENTARY"


class NoProgress(SocoPartError):
    """The auxiliary problem returned the anchor value itself."""

    code = "NO_PROGRESS"


class SQPDiverged(SocoPartError):
    code = "SQP_DIVERGED"


class PartitionMismatch(SocoPartError):
    code = "PARTITION_MISMATCH"


class PartitionNotConstant(SocoPartError):
    code = "PARTITION_NOT_CONSTANT"


class SingularJacobian(SocoPartError):
    code = "SINGULAR_JACOBIAN"


class Diverged(SocoPartError):
    code = "DIVERGED"


class LayoutMismatch(SocoPartError):
    code = "LAYOUT_MISMATCH"


class ParseError(SocoPartError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None,
                 column: int | None = None):
        where = f"line {line}" if line is not None else ""
        if column is not None:
            where += f", column {column}"
        super().__init__(f"{where}: {message}" if where else message,
                         line=line, column=column)
        self.line = line
        self.column = column


class DimensionMismatch(SocoPartError):
    code = "DIMENSION_MISMATCH"
