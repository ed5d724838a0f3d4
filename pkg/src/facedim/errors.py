"""Exception hierarchy shared across the package.

Plain I/O failures (missing files, permission errors) are not wrapped; they
surface as the builtin ``OSError`` family.
"""


class FacedimError(Exception):
    """Base class for all errors raised by this package."""


# --- statistics / linear algebra ---------------------------------------------

class InsufficientSamplesError(FacedimError):
    """Too few samples to fit a template (the covariance divides by count - 1)."""


class InvalidEmbeddingError(FacedimError):
    """Embedding data is malformed (wrong shape, non-finite values)."""


class SingularCovarianceError(FacedimError):
    """Covariance matrix is not positive definite."""


class DimensionError(FacedimError):
    """Vector/matrix dimensions do not agree."""


class ModelMismatchError(FacedimError):
    """Embeddings produced by different backbones were mixed."""


# --- augmentation -------------------------------------------------------------

class ConfigError(FacedimError):
    """Invalid configuration value (e.g. an empty or negative parameter range)."""


class ShapeError(FacedimError):
    """Image tensors have incompatible shapes."""


# --- file formats --------------------------------------------------------------

class FormatError(FacedimError):
    """File contents do not match the expected layout."""


class TruncationError(FormatError):
    """File ends before the payload announced by its header."""


class ParseError(FormatError):
    """A text field could not be parsed as a number."""


class VersionError(FormatError):
    """File was written by an unsupported format version."""


# --- gallery -------------------------------------------------------------------

class DuplicateIdentityError(FacedimError):
    """Identity is already enrolled and overwriting was not requested."""


class UnknownIdentityError(FacedimError):
    """Identity is not enrolled in the gallery."""


class EmptyGalleryError(FacedimError):
    """Operation requires at least one enrolled identity."""


# --- evaluation ----------------------------------------------------------------

class MissingLabelError(FacedimError):
    """Probes lack the identity labels needed for scoring."""


class InsufficientScoresError(FacedimError):
    """Both genuine and impostor scores are required."""


class InvalidCurveError(FacedimError):
    """FAR/FRR curve violates its monotonicity or range invariants."""


# --- detector client ------------------------------------------------------------

class NetworkTimeoutError(FacedimError):
    """Detection service did not answer in time (after one retry)."""


class ServiceError(FacedimError):
    """Detection service is unreachable or returned a non-2xx status."""

    def __init__(self, message: str, status: int | None = None) -> None:
        super().__init__(message)
        self.status = status


class ProtocolError(FacedimError):
    """Detection service answered with bytes that do not match the protocol."""


class InvalidBoxError(FacedimError):
    """Bounding box does not intersect the image."""
