"""Exception types shared across the package."""


class AugbenchError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(AugbenchError):
    """A dataset manifest is missing, unreadable, or references bad files."""


class ValidationError(AugbenchError):
    """Input data violates a declared contract (labels, shapes, ranges)."""


class ConfigError(AugbenchError):
    """A configuration value is outside its supported domain."""


class TrainingError(AugbenchError):
    """Training aborted, e.g. because a loss became non-finite."""
