"""Exception types shared across the pipeline.

Every error raised by the public API derives from MangaFaceError so callers
can catch pipeline failures without swallowing programming errors.
"""


class MangaFaceError(Exception):
    """Base class for all pipeline errors."""


# --- geometry / landmarks ---

class NoFaceFound(MangaFaceError):
    """The landmark detector returned nothing for the given photo."""


class InvalidSchema(MangaFaceError):
    """A landmark set does not match its declared point schema."""


class DegenerateFace(MangaFaceError):
    """A landmark configuration with zero-width regions or cheek box."""


class EmptyDataset(MangaFaceError):
    """An operation over a dataset received no samples."""


class InvalidGeo(MangaFaceError):
    """A geometry record that cannot be assembled into a valid face layout."""


# --- losses ---

class EmptyBatch(MangaFaceError):
    """A loss received an empty batch."""


class ShapeMismatch(MangaFaceError):
    """Paired tensors with incompatible shapes."""


class LevelMismatch(MangaFaceError):
    """Feature stacks with different level counts or per-level shapes."""


class OutOfRange(MangaFaceError):
    """Pixel values outside the [0, 255] gray range."""


class NonFinite(MangaFaceError):
    """A loss term or objective part is NaN or infinite."""


class ZeroDeviationWarning(UserWarning):
    """A sample coincides with the mean face and has no deviation direction."""


# --- networks / training ---

class UnsupportedResolution(MangaFaceError):
    """A network builder cannot produce a plan for the requested resolution."""


class ResolutionMismatch(MangaFaceError):
    """An input does not match the resolution a translator was built for."""


class ModelNotTrained(MangaFaceError):
    """Inference requested on a model with no trained weights."""


class BackendUnavailable(MangaFaceError):
    """A pretrained encoder backend was requested but no checkpoint exists."""


class CheckpointMismatch(MangaFaceError):
    """A checkpoint's layer plan does not match the current architecture."""


class Diverged(MangaFaceError):
    """Training produced a non-finite loss; carries the last good checkpoint."""

    def __init__(self, message: str, last_checkpoint: str | None = None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint


# --- ingestion / synthesis / io ---

class MalformedSample(MangaFaceError):
    """A dataset file violating the ingestion format; names file and violation."""


class MissingComponent(MangaFaceError):
    """Scene placement is missing an image for a required region."""


class NonMonotoneKnots(MangaFaceError):
    """Interpolation knots whose x values are not strictly increasing."""


class QueryOutOfRange(MangaFaceError):
    """An interpolation query outside the knot span."""


class ParseError(MangaFaceError):
    """A scene document that cannot be parsed; names the offending field."""


class StageError(MangaFaceError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause
