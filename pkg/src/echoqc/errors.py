"""Shared exception types."""


class ConfigurationError(ValueError):
    """Raised when layer/model wiring is inconsistent (shape or option mismatch)."""


class StateError(RuntimeError):
    """Raised when an operation is invoked in an invalid lifecycle state."""


class DataError(ValueError):
    """Raised when on-disk data fails validation (manifest, frames, checkpoints)."""
