"""Independent writer for the FEDM1 embedding container.

This is the extractor's half of the cross-component file contract:

    magic      5 bytes   b"FEDM1"
    dtype      u8        0x01 = IEEE float32 little-endian
    d          u32       vector dimension
    count      u32       number of rows
    id_len     u16       byte length of model_id (<= 256)
    model_id   UTF-8
    payload    count * d float32 values, row-major

Per-row identity labels go to a UTF-8 sidecar at ``<path>.labels``, one per
line, same order as the rows.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FEDM1"
DTYPE_FLOAT32 = 0x01
_HEADER = struct.Struct("<5sBIIH")


def write_fedm1(
    rows: np.ndarray,
    model_id: str,
    path: Path | str,
    labels: list[str] | None = None,
) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise ValueError(f"rows must be a (count, d) matrix, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("embedding rows contain non-finite values")
    model_bytes = model_id.encode("utf-8")
    if len(model_bytes) > 256:
        raise ValueError(f"model_id is {len(model_bytes)} bytes, limit 256")
    count, d = rows.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, DTYPE_FLOAT32, d, count, len(model_bytes)))
        fh.write(model_bytes)
        fh.write(rows.tobytes(order="C"))
    if labels is not None:
        if len(labels) != count:
            raise ValueError(f"{len(labels)} labels for {count} rows")
        Path(str(path) + ".labels").write_text(
            "".join(f"{label}\n" for label in labels), encoding="utf-8"
        )
