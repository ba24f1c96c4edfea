"""Exception hierarchy. Each concrete error carries the CLI exit code it maps to."""


class PcadRankError(Exception):
    exit_code = 3


class ConfigError(PcadRankError, ValueError):
    """Invalid parameters, flags, spec files or hyperparameters."""

    exit_code = 1


class DataError(PcadRankError, ValueError):
    """Ingestion and schema problems."""

    exit_code = 2


class ComputeError(PcadRankError, ValueError):
    """A computation could not run on the data it was given."""

    exit_code = 3
