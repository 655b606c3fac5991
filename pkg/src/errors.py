"""Exception types raised by the idk-amc library."""
from typing import Iterable, List


class AmcError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(AmcError, ValueError):
    """
    An experiment config, CLI argument or format name is invalid.

    Args:
        problems: One message per offending field. The exception text joins them so a single
            raise reports everything that is wrong with a config document.
    """
    def __init__(self, problems: Iterable[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems: List[str] = list(problems)
        super().__init__("; ".join(self.problems))


class UsageError(AmcError, ValueError):
    """An operation was called with arguments it cannot work with."""


class FitError(AmcError, ValueError):
    """Not enough points to fit an isolation partitioning."""


class FeatureError(AmcError, ValueError):
    """Moment features cannot be computed for a signal."""


class DatasetFormatError(AmcError):
    """A dataset file is truncated or does not carry the expected header."""


class ModelFileError(AmcError):
    """A partitioning or checkpoint file cannot be read."""
