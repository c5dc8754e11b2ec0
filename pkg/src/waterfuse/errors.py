"""Exception types shared across the package.

Every domain failure gets its own class so callers (and the CLI) can tell
data problems apart from programming errors.
"""


class WaterfuseError(Exception):
    """Base class for all domain errors raised by this package."""


class UndefinedDistributionError(WaterfuseError):
    """Pignistic transform requested for a mass function with m(empty) = 1."""


class RasterFormatError(WaterfuseError):
    """Raster container header is missing, malformed, or inconsistent."""


class RasterPayloadError(WaterfuseError):
    """Raster payload size does not match the header's declared shape."""


class NonFiniteValueError(WaterfuseError):
    """A raster band contains NaN or infinity."""


class MissingBandError(WaterfuseError):
    """A required named band is absent from the raster."""


class DegenerateBandError(WaterfuseError):
    """Band has no value spread (min == max); no histogram can be built."""


class UnimodalHistogramError(WaterfuseError):
    """Fewer than two peaks found; no water/non-water separation exists."""


class InsufficientSeparationError(WaterfuseError):
    """Too few histogram bins between the two peaks to fit the valley."""


class InsufficientTrainingDataError(WaterfuseError):
    """A class has fewer eligible training pixels than the required minimum."""


class UntrainableError(WaterfuseError):
    """Training features are degenerate (zero variance in every component)."""


class DegenerateCentersError(WaterfuseError):
    """The two class centers coincide; distances cannot be normalized."""


class PipelineError(WaterfuseError):
    """Wraps a module error with the pipeline stage where it occurred."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
