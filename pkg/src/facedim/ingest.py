"""Readers and writers for the embedding and image file formats.

Embeddings travel in a little-endian binary container (magic ``FEDM1``):

    magic      5 bytes   b"FEDM1"
    dtype      u8        0x01 = IEEE float32 little-endian
    d          u32       vector dimension, >= 1
    count      u32       number of rows, >= 1
    id_len     u16       byte length of model_id, <= 256
    model_id   id_len bytes, UTF-8
    payload    count * d float32 values, row-major

Nothing may follow the payload.  Storage is 32-bit; everything downstream
computes in 64-bit.  Per-row identity labels, when present, live in a UTF-8
sidecar at ``<path>.labels`` (one label per line, same row order) so the
binary layout itself stays fixed.

The CSV dialect is comma-separated with ``.`` decimals and an optional single
header row; when the header's last column is named ``label`` the final field
of each row is read as the identity label.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ._io import atomic_write_bytes
from .augment import ImageTensor
from .errors import FormatError, ParseError, TruncationError
from .template import EmbeddingSet

MAGIC = b"FEDM1"
DTYPE_FLOAT32 = 0x01
MAX_MODEL_ID_BYTES = 256
LABELS_SUFFIX = ".labels"

_HEADER = struct.Struct("<5sBIIH")


def labels_path(path: Path | str) -> Path:
    """Sidecar file holding one identity label per embedding row."""
    return Path(str(path) + LABELS_SUFFIX)


def write_embeddings(embedding_set: EmbeddingSet, path: Path | str) -> None:
    """Write an embedding set in the FEDM1 layout (rows narrowed to float32).

    Labels, when present on the set, go to the ``.labels`` sidecar; a stale
    sidecar from a previous write is removed when the set is unlabeled.
    """
    path = Path(path)
    model_bytes = embedding_set.model_id.encode("utf-8")
    if len(model_bytes) > MAX_MODEL_ID_BYTES:
        raise FormatError(
            f"model_id is {len(model_bytes)} bytes, limit is {MAX_MODEL_ID_BYTES}"
        )
    header = _HEADER.pack(
        MAGIC,
        DTYPE_FLOAT32,
        embedding_set.dim,
        embedding_set.count,
        len(model_bytes),
    )
    payload = embedding_set.rows.astype("<f4").tobytes(order="C")
    atomic_write_bytes(path, header + model_bytes + payload)

    sidecar = labels_path(path)
    if embedding_set.source_labels is None:
        sidecar.unlink(missing_ok=True)
    else:
        for label in embedding_set.source_labels:
            if "\n" in label or "\r" in label:
                raise FormatError(f"labels must be single-line, got {label!r}")
        text = "".join(f"{label}\n" for label in embedding_set.source_labels)
        atomic_write_bytes(sidecar, text.encode("utf-8"))


def read_embeddings(path: Path | str) -> EmbeddingSet:
    """Read a FEDM1 file, widening values to float64.

    A ``.labels`` sidecar next to the file, when present, populates
    ``source_labels``.

    Raises:
        FormatError: wrong magic, unsupported dtype, bad header fields, or
            trailing bytes after the payload.
        TruncationError: file ends before the payload announced by the header.
        InvalidEmbeddingError: payload holds non-finite values.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic, not a FEDM1 file")
    if len(data) < _HEADER.size:
        raise TruncationError(f"{path}: file ends inside the header")
    _, dtype, d, count, id_len = _HEADER.unpack_from(data, 0)
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unsupported dtype 0x{dtype:02x}")
    if d < 1 or count < 1:
        raise FormatError(f"{path}: d and count must be >= 1, got d={d} count={count}")
    if id_len > MAX_MODEL_ID_BYTES:
        raise FormatError(f"{path}: model_id length {id_len} exceeds {MAX_MODEL_ID_BYTES}")
    expected = _HEADER.size + id_len + 4 * d * count
    if len(data) < expected:
        raise TruncationError(
            f"{path}: expected {expected} bytes for {count} rows of dimension {d}, "
            f"got {len(data)}"
        )
    if len(data) > expected:
        raise FormatError(f"{path}: {len(data) - expected} trailing bytes after payload")
    try:
        model_id = data[_HEADER.size : _HEADER.size + id_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: model_id is not valid UTF-8") from exc
    rows = (
        np.frombuffer(data, dtype="<f4", count=count * d, offset=_HEADER.size + id_len)
        .reshape(count, d)
        .astype(np.float64)
    )

    labels: tuple[str, ...] | None = None
    sidecar = labels_path(path)
    if sidecar.exists():
        lines = sidecar.read_text(encoding="utf-8").splitlines()
        if len(lines) != count:
            raise FormatError(
                f"{sidecar}: {len(lines)} labels for {count} embedding rows"
            )
        labels = tuple(lines)
    return EmbeddingSet(rows, model_id, labels)


def read_image(path: Path | str) -> ImageTensor:
    """Decode a PNG into an ImageTensor; 8-bit channel value v maps to v/255.

    Grayscale files keep one channel; every other mode is converted to RGB.

    Raises:
        FormatError: the file is not a decodable PNG.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                raise FormatError(f"{path}: expected PNG, got {img.format}")
            if img.mode == "L":
                arr = np.asarray(img, dtype=np.float64)[:, :, None]
            else:
                arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: cannot decode image: {exc}") from exc
    return ImageTensor(arr / 255.0)


def write_image(image: ImageTensor, path: Path | str) -> None:
    """Encode an ImageTensor as PNG, mapping [0, 1] back to 8-bit channels."""
    px = np.rint(image.pixels * 255.0).astype(np.uint8)
    if image.channels == 1:
        pil = Image.fromarray(px[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(px, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


def read_embeddings_csv(path: Path | str, model_id: str) -> EmbeddingSet:
    """Read embeddings from CSV: one row per embedding, numeric fields only.

    An optional single header row is detected by its non-numeric fields;
    when the header's last column is ``label`` the final field of every data
    row becomes that row's identity label.

    Raises:
        FormatError: ragged rows or an empty file.
        ParseError: a data field that is not a number.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        raw = [row for row in csv.reader(fh) if row]
    if not raw:
        raise FormatError(f"{path}: empty CSV")

    def numeric(field: str) -> bool:
        try:
            float(field)
        except ValueError:
            return False
        return True

    has_header = not all(numeric(f) for f in raw[0])
    header = [f.strip() for f in raw[0]] if has_header else None
    data = raw[1:] if has_header else raw
    if not data:
        raise FormatError(f"{path}: header but no data rows")
    has_labels = header is not None and header and header[-1].lower() == "label"

    width = len(data[0])
    values: list[list[float]] = []
    labels: list[str] = []
    for i, row in enumerate(data):
        if len(row) != width:
            raise FormatError(
                f"{path}: row {i + 1} has {len(row)} fields, expected {width}"
            )
        fields = row[:-1] if has_labels else row
        if has_labels:
            labels.append(row[-1])
        try:
            values.append([float(f) for f in fields])
        except ValueError as exc:
            raise ParseError(f"{path}: non-numeric field in row {i + 1}: {exc}") from exc
    return EmbeddingSet(
        np.array(values, dtype=np.float64),
        model_id,
        tuple(labels) if has_labels else None,
    )
