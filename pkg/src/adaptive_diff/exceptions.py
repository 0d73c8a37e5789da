"""Exception types shared across the estimator, simulator and CLI."""


class ConfigError(ValueError):
    """Invalid configuration value, missing key or unknown key."""


class NotReadyError(LookupError):
    """A windowed or running statistic does not yet have enough samples."""


class DegenerateCovarianceError(ArithmeticError):
    """A covariance or innovation variance cannot be inverted."""
