"""Exception types shared across the package."""


class CondsurvError(Exception):
    """Base class for all condsurv errors."""


class DegenerateWeightsError(CondsurvError):
    """Every kernel weight vanished: x0 is too far from all covariates at this bandwidth."""


class NoEventsError(CondsurvError):
    """Pilot bandwidth rules need at least one uncensored observation."""


class InsufficientReplicatesError(CondsurvError):
    """At least two bootstrap curves are required."""


class DegenerateVarianceError(CondsurvError):
    """Bootstrap standard deviation is identically zero; no calibration bracket exists."""


class SelectionFailedError(CondsurvError):
    """The bandwidth objective was non-finite everywhere in the search box."""


class SchemaError(CondsurvError):
    """Dataset schema is inconsistent with the file contents."""


class DataValidationError(CondsurvError):
    """A data row failed validation.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class EmptyDatasetError(CondsurvError):
    """No usable rows remain after parsing or filtering."""
