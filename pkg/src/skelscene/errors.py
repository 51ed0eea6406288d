"""Exception types raised across the pipeline."""


class SkelSceneError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateFrame(SkelSceneError):
    """Local coordinate frame cannot be built (hips coincide or spine on hip line)."""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


class SequenceTooShort(SkelSceneError):
    """Operation needs more frames than the sequence provides."""


class LengthMismatch(SkelSceneError):
    """Two series that must have equal length do not."""


class ParseError(SkelSceneError):
    """Malformed row or cell in a sequence file."""

    def __init__(self, line, column, reason):
        super().__init__(f"line {line}, column {column!r}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class SchemaError(SkelSceneError):
    """Sequence file header does not match the canonical column set."""


class SplitError(SkelSceneError):
    """Split spec omits or duplicates subjects of the manifest."""


class IntervalTooShort(SkelSceneError):
    """A trajectory needs at least a start and an end frame."""


class WidthOverflow(SkelSceneError):
    """Descriptor block wider than the configured feature-matrix width."""


class ShapeMismatch(SkelSceneError):
    """Array shape does not match the model configuration."""


class LabelOutOfRange(SkelSceneError):
    """Class label outside the configured class count."""


class EmptyClass(SkelSceneError):
    """Training data contains no sample for some class."""


class DivergedLoss(SkelSceneError):
    """Training loss or a parameter became non-finite."""


class ConfigError(SkelSceneError):
    """Pipeline configuration failed validation."""


class ConfigMismatch(SkelSceneError):
    """Artifacts produced under different configurations were combined."""
