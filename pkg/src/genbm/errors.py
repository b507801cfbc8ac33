"""Exception types shared across the package."""


class GenBMError(Exception):
    """Base class for all package errors."""


class InvalidCoefficientsError(GenBMError):
    """Boundary coefficients violate a validity constraint."""


class InvalidFunctionError(GenBMError):
    """A test function does not satisfy the requirements of an operation."""


class InvalidWindowError(GenBMError):
    """An exit window touches the origin or is not grid aligned."""


class ContractNotApplicableError(GenBMError):
    """A check was requested for a function outside its stated preconditions."""


class ToleranceNotMetError(GenBMError):
    """A numerical routine could not reach its target accuracy."""


class HorizonTooShortError(GenBMError):
    """A time horizon is too short for the requested Laplace truncation."""


class StepRejectionError(GenBMError):
    """The time stepper detected norm growth and rejected the run."""


class UnsupportedQueryError(GenBMError):
    """A path record does not carry enough information for the query."""


class NoDataError(GenBMError):
    """An estimator received no usable samples."""


class EventCapError(GenBMError):
    """A single path exceeded the configured event-count cap."""


class ConfigError(GenBMError):
    """A run configuration is malformed or fails validation."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
