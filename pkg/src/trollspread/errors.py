"""Exception hierarchy shared by the pipeline stages.

The CLI maps these onto exit codes: :class:`ConfigError` -> 1,
:class:`DataError` -> 2, :class:`InvariantError` -> 3.
"""


class TrollspreadError(Exception):
    pass


class ConfigError(TrollspreadError):
    """Bad flags, config file, or parameter values."""


class DataError(TrollspreadError):
    """Input files are missing, unreadable, or semantically unusable."""


class InvariantError(TrollspreadError):
    """An internal consistency check failed."""
