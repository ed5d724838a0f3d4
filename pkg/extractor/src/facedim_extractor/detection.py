"""Minimal client for the face-detection HTTP interface.

Same wire protocol as the verification core documents: POST the PNG bytes
with ``Content-Type: image/png`` (plus a bearer token when configured) and
receive a JSON array of ``{x, y, width, height, confidence}`` boxes.
"""

from __future__ import annotations

import logging

import requests

from .errors import DetectorError

logger = logging.getLogger(__name__)


def best_box(
    image_bytes: bytes,
    endpoint_url: str,
    min_confidence: float = 0.5,
    timeout_s: float = 10.0,
    auth_token: str | None = None,
) -> tuple[int, int, int, int] | None:
    """The (x, y, width, height) of the most confident detection, or None.

    Raises:
        DetectorError: request failure, non-2xx status, or malformed payload.
    """
    headers = {"Content-Type": "image/png"}
    if auth_token:
        headers["Authorization"] = f"Bearer {auth_token}"
    try:
        response = requests.post(
            endpoint_url, data=image_bytes, headers=headers, timeout=timeout_s
        )
    except requests.RequestException as exc:
        raise DetectorError(f"detector request failed: {exc}") from exc
    if not 200 <= response.status_code < 300:
        raise DetectorError(f"detector returned HTTP {response.status_code}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise DetectorError("detector response is not valid JSON") from exc
    if not isinstance(payload, list):
        raise DetectorError("detector response must be a JSON array")

    best: tuple[float, tuple[int, int, int, int]] | None = None
    for item in payload:
        try:
            confidence = float(item["confidence"])
            box = (int(item["x"]), int(item["y"]), int(item["width"]), int(item["height"]))
        except (TypeError, KeyError, ValueError) as exc:
            raise DetectorError(f"malformed box entry {item!r}") from exc
        if confidence < min_confidence:
            continue
        if best is None or confidence > best[0]:
            best = (confidence, box)
    if best is None:
        return None
    return best[1]
