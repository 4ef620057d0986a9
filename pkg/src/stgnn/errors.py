"""Exception hierarchy shared across the package."""


class StgnnError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(StgnnError):
    """Operand shapes are incompatible for the requested operation."""


class ValidationError(StgnnError):
    """A config value, graph edge, or dataset failed validation."""


class SchemaError(ValidationError):
    """An input file is missing required columns or fields."""


class NumericError(StgnnError):
    """A computation produced non-finite values."""


class CheckpointError(StgnnError):
    """A checkpoint file is unreadable, corrupted, or incompatible."""
