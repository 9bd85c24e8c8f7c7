"""Exception hierarchy shared by the library and the CLI.

Data errors describe bad input (exit code 2 on the command line);
computation errors describe inputs that are well-formed but on which an
operation is undefined (exit code 3).
"""


class SepScoreError(ValueError):
    """Base class for all errors raised by sepscore."""

    exit_code = 3


class DataError(SepScoreError):
    """Malformed or invalid input data."""

    exit_code = 2


class ComputationError(SepScoreError):
    """A computation is undefined for otherwise valid input."""

    exit_code = 3


# ---- data errors ---------------------------------------------------------

class InvalidShape(DataError):
    """Coordinates or labels do not have the expected shape."""


class NonFinite(DataError):
    """A coordinate is NaN or infinite."""


class DegenerateLabels(DataError):
    """Fewer than two distinct group labels."""


class EmptyGroup(DataError):
    """A declared group has no members."""


class UnknownLabel(DataError):
    """A requested label does not exist in the cloud."""


class ParseError(DataError):
    """A cell of an input file could not be parsed."""

    def __init__(self, message: str, row: int = None, column: str = None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingLabelColumn(DataError):
    """The label column is absent from an input file."""


class ManifestError(DataError):
    """A candidate manifest is malformed."""


class GroupTooSmall(DataError):
    """A group has fewer members than a balanced subsample requires."""


class ZeroSum(DataError):
    """A row or column sum is zero under DRS/DCS normalization."""


class NegativeInputForLog(DataError):
    """LOG normalization received a negative value."""


class OutOfRangeP(DataError):
    """A p-value lies outside [0, 1]."""


class InvalidParameter(DataError):
    """An argument lies outside its admissible range."""


# ---- computation errors --------------------------------------------------

class EmptySubset(ComputationError):
    """A centroid was requested for an empty set of points."""


class EmptyGroupInput(ComputationError):
    """A two-sample statistic received an empty sample."""


class CoincidentCentroids(ComputationError):
    """Two centroids are too close to define a projection line."""


class ConstantRow(ComputationError):
    """A profile row has zero standard deviation."""


class RankDeficient(ComputationError):
    """Fewer positive eigenvalues than requested components."""


class DegenerateTriangle(ComputationError):
    """Triangle vertices are collinear."""
