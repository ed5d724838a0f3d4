"""Embedding extraction: pretrained CNN backbones to FEDM1 files."""

from .backbones import SUPPORTED_BACKBONES, BackboneSpec, EmbeddingModel, load_backbone
from .errors import ConfigError, DependencyError, DetectorError, ExtractorError
from .extract import extract, extract_with_detection
from .writer import write_fedm1

__version__ = "0.1.0"

__all__ = [
    "BackboneSpec",
    "ConfigError",
    "DependencyError",
    "DetectorError",
    "EmbeddingModel",
    "ExtractorError",
    "SUPPORTED_BACKBONES",
    "extract",
    "extract_with_detection",
    "load_backbone",
    "write_fedm1",
    "__version__",
]
