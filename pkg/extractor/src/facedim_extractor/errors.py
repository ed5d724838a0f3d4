"""Extractor exception types."""


class ExtractorError(Exception):
    """Base class for extractor failures."""


class ConfigError(ExtractorError):
    """Unknown backbone or invalid configuration."""


class DependencyError(ExtractorError):
    """Pretrained weights (or the architecture itself) are not obtainable."""


class DetectorError(ExtractorError):
    """The detection service failed or answered with malformed bytes."""
