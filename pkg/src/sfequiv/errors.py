"""Exception hierarchy.

Three branches map onto the CLI exit-code contract: configuration problems
(exit 2), data/file problems (exit 3) and metric computation failures
(exit 4).
"""


class SfequivError(Exception):
    """Base class for all package errors."""


class ConfigError(SfequivError):
    """Invalid run configuration or schema declaration."""


class DataError(SfequivError):
    """Malformed or incompatible input data."""


class MetricError(SfequivError):
    """A metric could not be computed on otherwise valid data."""


# -- data errors -------------------------------------------------------------

class MissingColumn(DataError):
    pass


class UnknownCategory(DataError):
    pass


class MalformedNumeric(DataError):
    pass


class EmptyFile(DataError):
    pass


class DuplicateHeader(DataError):
    pass


class UnknownVariable(DataError):
    pass


class NotCategorical(DataError):
    pass


class EmptyTable(DataError):
    pass


class EmptySynth(DataError):
    pass


# -- metric errors -----------------------------------------------------------

class SeparationError(MetricError):
    """Logistic MLE does not exist (separated data) or the fit diverged."""


class SingularInformation(MetricError):
    """The information matrix is singular (collinear design)."""


class RankDeficient(MetricError):
    """Design matrix has fewer independent columns than terms."""


class DegenerateBaseline(MetricError):
    """Baseline attribution probability is 1; scaling is undefined."""


class ZeroWidthInterval(MetricError):
    pass


class NegativeInput(MetricError):
    pass


class MissingBinning(MetricError):
    """A numeric variable was used in a tabulation without a binning rule."""


class EmptyCurve(MetricError):
    pass


class EmptyScores(MetricError):
    pass
