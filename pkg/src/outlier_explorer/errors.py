"""Exception types shared across the package."""


class ExplorerError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ExplorerError, ValueError):
    """Problems with dataset content or shape."""


class MalformedCellError(DataError):
    """A cell failed to parse as a finite real number."""

    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"malformed cell at row {row}, column {column!r}: {value!r}")


class LabelError(DataError):
    """A label value is outside {0, 1} or the label vector is degenerate."""


class SizeError(DataError):
    """Dataset too small for the requested operation."""


class ParameterError(ExplorerError, ValueError):
    """An operation parameter is out of its valid range."""


class TrainingError(ExplorerError):
    """Model fitting failed (usually too few samples)."""


class DetectorExecutionError(ExplorerError):
    """A detector raised during execution; carries the candidate identity."""

    def __init__(self, candidate, cause):
        self.candidate = candidate
        self.cause = cause
        super().__init__(f"detector {candidate} failed: {cause}")


class InfeasibleInstanceError(ExplorerError):
    """No detector subset satisfies the budget and diversity constraints.

    ``violations`` describes the tightest unsatisfiable constraints;
    ``proven`` is True when the search space was exhausted (as opposed to a
    node-limit stop with no incumbent).
    """

    def __init__(self, violations, proven=True):
        self.violations = list(violations)
        self.proven = proven
        detail = "; ".join(str(v) for v in self.violations) or "no feasible selection"
        super().__init__(detail)
