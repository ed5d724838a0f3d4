"""Client for an external face-detection HTTP service, plus local cropping.

The service receives a POST whose body is the raw PNG bytes with
``Content-Type: image/png`` (and ``Authorization: Bearer <token>`` when a
token is configured) and must answer with a JSON array of boxes:

    [{"x": 10, "y": 20, "width": 64, "height": 48, "confidence": 0.93}, ...]

Responses that deviate from this shape in any way map to ProtocolError; the
client never crashes on arbitrary server bytes.  One retry is attempted on
timeout, nothing else.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import requests

from .augment import ImageTensor
from .errors import (
    ConfigError,
    InvalidBoxError,
    NetworkTimeoutError,
    ProtocolError,
    ServiceError,
)

logger = logging.getLogger(__name__)

_BOX_KEYS = ("x", "y", "width", "height", "confidence")


@dataclass(frozen=True)
class BoundingBox:
    """Detected face region: top-left pixel, extent, and confidence."""

    x: int
    y: int
    width: int
    height: int
    confidence: float

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ValueError("box origin must be nonnegative")
        if self.width < 1 or self.height < 1:
            raise ValueError("box extent must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorConfig:
    endpoint_url: str
    timeout_ms: int = 5000
    min_confidence: float = 0.5
    auth_token: str | None = None

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ConfigError("min_confidence must lie in [0, 1]")


def _as_int(value, key: str) -> int:
    if isinstance(value, bool):
        raise ProtocolError(f"box field {key!r} must be a number, got a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ProtocolError(f"box field {key!r} must be an integer, got {value!r}")


def _parse_box(item) -> BoundingBox:
    if not isinstance(item, dict):
        raise ProtocolError(f"box entry must be an object, got {type(item).__name__}")
    missing = [key for key in _BOX_KEYS if key not in item]
    if missing:
        raise ProtocolError(f"box entry is missing fields: {', '.join(missing)}")
    confidence = item["confidence"]
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        raise ProtocolError(f"box field 'confidence' must be a number, got {confidence!r}")
    try:
        return BoundingBox(
            x=_as_int(item["x"], "x"),
            y=_as_int(item["y"], "y"),
            width=_as_int(item["width"], "width"),
            height=_as_int(item["height"], "height"),
            confidence=float(confidence),
        )
    except ValueError as exc:
        raise ProtocolError(f"box entry is out of range: {exc}") from exc


def detect_faces(image_bytes: bytes, config: DetectorConfig) -> list[BoundingBox]:
    """POST a PNG to the detection service and parse the returned boxes.

    Boxes below ``config.min_confidence`` are dropped; the rest come back
    sorted by descending confidence.

    Raises:
        NetworkTimeoutError: no answer within the timeout, twice.
        ServiceError: connection failure or non-2xx response.
        ProtocolError: response bytes that do not match the protocol.
    """
    headers = {"Content-Type": "image/png"}
    if config.auth_token:
        headers["Authorization"] = f"Bearer {config.auth_token}"
    timeout = config.timeout_ms / 1000.0

    response = None
    last_timeout: Exception | None = None
    for _ in range(2):  # single retry on timeout
        try:
            response = requests.post(
                config.endpoint_url, data=image_bytes, headers=headers, timeout=timeout
            )
            break
        except requests.Timeout as exc:
            last_timeout = exc
        except requests.RequestException as exc:
            raise ServiceError(f"detector request failed: {exc}") from exc
    if response is None:
        raise NetworkTimeoutError(
            f"detector did not answer within {config.timeout_ms} ms (after one retry)"
        ) from last_timeout

    if not 200 <= response.status_code < 300:
        raise ServiceError(
            f"detector returned HTTP {response.status_code}",
            status=response.status_code,
        )
    try:
        payload = response.json()
    except ValueError as exc:
        raise ProtocolError("detector response is not valid JSON") from exc
    if not isinstance(payload, list):
        raise ProtocolError(
            f"detector response must be a JSON array, got {type(payload).__name__}"
        )
    boxes = [_parse_box(item) for item in payload]
    kept = [box for box in boxes if box.confidence >= config.min_confidence]
    kept.sort(key=lambda box: -box.confidence)
    return kept


def crop(image: ImageTensor, box: BoundingBox) -> ImageTensor:
    """Cut the box out of the image, clamping it to the image bounds.

    Raises:
        InvalidBoxError: the box does not intersect the image.
    """
    x1 = min(box.x + box.width, image.width)
    y1 = min(box.y + box.height, image.height)
    if box.x >= x1 or box.y >= y1:
        raise InvalidBoxError(
            f"box ({box.x}, {box.y}, {box.width}x{box.height}) lies outside "
            f"the {image.width}x{image.height} image"
        )
    return ImageTensor(image.pixels[box.y : y1, box.x : x1, :])


def detect_and_crop(
    image: ImageTensor, image_bytes: bytes, config: DetectorConfig
) -> ImageTensor:
    """Crop to the highest-confidence detection, or keep the whole image.

    When the service returns no box above the confidence floor the whole
    image is used (with a warning) so pre-cropped datasets keep working.
    """
    boxes = detect_faces(image_bytes, config)
    if not boxes:
        logger.warning("detector returned no usable boxes; using the whole image")
        return image
    return crop(image, boxes[0])
