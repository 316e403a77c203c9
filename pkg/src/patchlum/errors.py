"""Exception hierarchy shared by all patchlum modules."""


class PatchlumError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PatchlumError, ValueError):
    """An argument lies outside the physical domain of an operation."""


class ConfigError(PatchlumError, ValueError):
    """A configuration document or run parameter is invalid."""


class SchemaError(ConfigError):
    """A CSV file does not match the expected schema."""


class AnalysisError(PatchlumError):
    """A data-analysis step (FWHM, peak finding, ...) cannot proceed."""


class NumericalError(PatchlumError):
    """A numerical procedure failed or left its range of validity."""


class AboveThresholdError(NumericalError):
    """The sub-threshold model was evaluated at or beyond its pole."""


class RankDeficiencyError(NumericalError):
    """The normal matrix of a least-squares problem is singular."""
