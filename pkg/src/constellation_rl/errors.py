class ConfigurationError(ValueError):
    """Raised when an environment, agent or experiment configuration is invalid."""


class UndefinedMetricError(ValueError):
    """Raised when a metric is requested on inputs where it has no value."""
