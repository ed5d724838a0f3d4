"""Few-shot biometric verification over Gaussian embedding templates.

Identities are enrolled from small sets of face embeddings, modeled as
multivariate normal distributions, and probes are accepted or rejected by
Mahalanobis distance against a threshold calibrated at the equal error rate.
"""

from .augment import (
    AugmentConfig,
    AugmentationParams,
    ImageTensor,
    apply_transform,
    augment_set,
    sample_params,
)
from .detector import BoundingBox, DetectorConfig, crop, detect_and_crop, detect_faces
from .errors import FacedimError
from .evaluation import (
    EvalReport,
    ScoreSet,
    eer,
    evaluate_scores,
    export_report,
    far_frr_curve,
    score_matrix,
)
from .gallery import (
    Gallery,
    VerificationResult,
    enroll,
    identify,
    load_gallery,
    save_gallery,
    verify,
)
from .ingest import (
    read_embeddings,
    read_embeddings_csv,
    read_image,
    write_embeddings,
    write_image,
)
from .template import (
    DEFAULT_EPSILON,
    Embedding,
    EmbeddingSet,
    GaussianTemplate,
    batch_mahalanobis,
    cholesky_spd,
    fit_template,
    mahalanobis,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentationParams",
    "BoundingBox",
    "DEFAULT_EPSILON",
    "DetectorConfig",
    "Embedding",
    "EmbeddingSet",
    "EvalReport",
    "FacedimError",
    "Gallery",
    "GaussianTemplate",
    "ImageTensor",
    "ScoreSet",
    "VerificationResult",
    "apply_transform",
    "augment_set",
    "batch_mahalanobis",
    "cholesky_spd",
    "crop",
    "detect_and_crop",
    "detect_faces",
    "eer",
    "enroll",
    "evaluate_scores",
    "export_report",
    "far_frr_curve",
    "fit_template",
    "identify",
    "load_gallery",
    "mahalanobis",
    "read_embeddings",
    "read_embeddings_csv",
    "read_image",
    "sample_params",
    "save_gallery",
    "score_matrix",
    "verify",
    "write_embeddings",
    "write_image",
    "__version__",
]
