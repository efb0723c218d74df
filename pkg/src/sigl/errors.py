"""Exception types raised across the package."""


class SiglInputError(ValueError):
    """An argument violates a documented precondition (shape, range, size)."""


class ModelFormatError(ValueError):
    """A persisted document is corrupt or carries an unexpected schema version."""
