"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code (see ``periodpoly.cli``).
"""


class PeriodPolyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PeriodPolyError, ValueError):
    """Argument outside the mathematical domain of a function."""


class PrecisionError(PeriodPolyError):
    """A truncation or tail bound does not meet the requested accuracy."""


class BudgetError(PrecisionError):
    """Meeting the precision budget would need more terms than the hard cap."""


class ParseError(PeriodPolyError):
    """Input could not be parsed."""


class SchemaError(ParseError):
    """Parsed document is missing a field or has a field of the wrong type."""


class GapError(ParseError):
    """Coefficient list has a missing index."""


class NotFoundError(PeriodPolyError):
    """Unknown newform label."""


class InsufficientDataError(PeriodPolyError):
    """The data source stores fewer coefficients than requested."""


class NetworkError(PeriodPolyError):
    """Transport failure, or offline mode with a cold cache."""


class IllConditionedError(PeriodPolyError):
    """A linear solve had a vanishing coefficient."""


class MonotonicityViolation(PeriodPolyError):
    """|Λ(s, f)| failed to increase to the right of the critical line.

    This is a theorem, so hitting it means a numerical bug.
    """


class ConvergenceError(PeriodPolyError):
    """Iterative method did not converge."""


class BranchError(PeriodPolyError):
    """t_f(e^{iθ}) has an imaginary part above tolerance."""


class MatchingError(PeriodPolyError):
    """Two roots matched the same predicted angle."""


class ValidationFailed(PeriodPolyError):
    """A descriptor failed validation and the caller asked for a hard stop."""

    def __init__(self, report):
        self.report = report
        rules = sorted({v.rule for v in report.violations})
        super().__init__("descriptor failed validation: " + ", ".join(rules))
