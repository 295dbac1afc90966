"""Exception and warning taxonomy shared across the package.

Three broad families map onto the CLI exit codes: usage problems (bad
arguments), data problems (malformed or semantically invalid inputs), and
numerical failures (non-finite values, solver breakdown).
"""


class SubfusionError(Exception):
    """Base class for all package-specific errors."""


class UsageError(SubfusionError):
    """Bad command-line arguments or unknown configuration keys."""


class DataError(SubfusionError):
    """Invalid or inconsistent input data."""


class NumericalError(SubfusionError):
    """Numerical failure: non-finite values or solver breakdown."""


# -- data errors -----------------------------------------------------------

class MalformedFile(DataError):
    pass


class EmptyDataset(DataError):
    pass


class SingleClass(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class InvalidConfig(DataError):
    pass


class InvalidCounts(DataError):
    pass


class KTooLarge(DataError):
    pass


class KExceedsClassSize(DataError):
    pass


class MissingEmbedding(DataError):
    pass


class TooFewSamples(DataError):
    pass


class PerplexityInfeasible(DataError):
    pass


class InvalidDistribution(DataError):
    pass


class EmptyClass(DataError):
    pass


class LengthMismatch(DataError):
    pass


# -- numerical errors ------------------------------------------------------

class NonFinite(NumericalError):
    pass


# -- warnings --------------------------------------------------------------

class DegenerateColumn(UserWarning):
    """A self-representation column had no usable correlations and was zeroed."""


class NoPositives(UserWarning):
    """A class had no positive samples and was excluded from mAP."""
