"""Exception types raised by the analysis engine.

Every error that callers are expected to branch on gets its own class;
generic failures use the stdlib exceptions directly.
"""


class AcclaimError(Exception):
    """Base class for engine errors."""


class SchemaError(AcclaimError):
    """Input table does not match the canonical schema manifest."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "schema validation failed")


class ConfigError(AcclaimError):
    """Invalid pipeline or generator configuration."""


class AuthorIneligible(AcclaimError):
    """Author has no posts in the baseline window."""


class GroupTooSmall(AcclaimError):
    """A (subreddit, month) group has too few posts to compute quartiles."""


class EmptyText(AcclaimError):
    """Text produced no tokens or no sentences."""


class InvalidComposition(AcclaimError):
    """Proportion vector contains negative entries or is not a simplex."""


class InsufficientRows(AcclaimError):
    """Not enough rows for the requested fit."""


class ShapeError(AcclaimError):
    """Matrix dimensions do not match the fitted model."""


class NoVaryingColumns(AcclaimError):
    """Every numeric column is constant on the standardization population."""


class SubredditSkipped(AcclaimError):
    """Subreddit cannot support a risk model (single class or too small)."""


class EmptyGroup(AcclaimError):
    """A comparison group is empty."""


class NumericError(AcclaimError):
    """Non-finite values encountered during optimization."""


class MaxIterExceeded(AcclaimError):
    """IRLS did not converge within the iteration budget."""

    def __init__(self, message, trace=None, result=None):
        super().__init__(message)
        self.trace = trace
        self.result = result


class SingleClusterError(AcclaimError):
    """Cluster-robust covariance needs at least two clusters."""


class InvalidPValue(AcclaimError):
    """p-value outside [0, 1]."""


class DegenerateLabels(AcclaimError):
    """Training labels contain a single class."""


class UndefinedAuc(AcclaimError):
    """AUC is undefined without both a positive and a negative."""


class BaselineSkipped(AcclaimError):
    """Prosociality baseline inputs are missing."""


class DegenerateCentroid(AcclaimError):
    """Centroid has zero norm; cosine distance undefined."""


class InsufficientGroup(AcclaimError):
    """Welch's test needs at least two values per group."""


class PipelineHalt(AcclaimError):
    """A pipeline stage cannot proceed; diagnostics attached."""

    def __init__(self, stage, message, diagnostics=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.diagnostics = diagnostics or {}
