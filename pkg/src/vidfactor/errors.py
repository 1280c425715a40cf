"""Exception types. Validation errors carry enough context to name the
offending frame/box/key in their message."""


class VidfactorError(Exception):
    """Base for all package errors."""


class ValidationError(VidfactorError):
    """Invalid input data or arguments."""


class MaskError(ValidationError):
    """Mask is not binary or misaligned with its clip."""


class BoxError(ValidationError):
    """Bounding box inverted or out of range."""


class ClipLoadError(VidfactorError):
    """A frame image is missing or undecodable."""


class ClipRangeError(VidfactorError):
    """Not enough frames remain to cut a clip."""


class SynthesisError(VidfactorError):
    """Synthetic clip generation could not satisfy its constraints."""


class SplitError(ValidationError):
    """Dataset cannot be split as requested."""


class ConfigError(ValidationError):
    """Bad config file, unknown key, or type-invalid value."""


class CheckpointError(VidfactorError):
    """Checkpoint missing, malformed, or shape-incompatible."""


class TrainingDivergedError(VidfactorError):
    """A loss component became non-finite."""
