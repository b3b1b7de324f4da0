"""Exception hierarchy shared across the package."""


class EpdError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EpdError):
    """Invalid user-supplied configuration (bad model name, bounds, seeds, ...)."""


class DataFormatError(ConfigurationError):
    """Malformed input data file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EvaluationError(EpdError):
    """A model right-hand side produced an invalid (non-finite) value."""


class IntegrationFailure(EpdError):
    """The IVP solver could not reach the requested end time.

    Carries the last time the integration reached before giving up.
    """

    def __init__(self, message, last_time=0.0, n_steps=0):
        super().__init__(f"{message} (last reached t={last_time:g} after {n_steps} steps)")
        self.last_time = last_time
        self.n_steps = n_steps


class GenerationError(EpdError):
    """Synthetic data generation failed (e.g. a sampled parameter set does not integrate)."""


class EstimationError(EpdError):
    """A pipeline-level estimation failure."""


class NoSuccessfulFits(EstimationError):
    """Every fit in a batch failed; accept probabilities are undefined."""


class MetricsError(EpdError):
    """Invalid input to a metrics computation (empty samples, mismatched parameters)."""
