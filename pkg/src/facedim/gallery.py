"""Identity gallery: enrollment, verification, identification, persistence.

Galleries are saved in a little-endian binary container (magic ``FTPL1``):

    magic         5 bytes   b"FTPL1"
    version       u16       currently 1
    created_at    f64       UNIX timestamp, seconds
    id_len        u16       model_id byte length
    model_id      UTF-8
    count         u32       number of templates
    per template:
        id_len        u16       identity_id byte length
        identity_id   UTF-8
        d             u32
        sample_count  u32
        epsilon       f64
        mean          d float64 values
        chol_lower    d*(d+1)/2 float64 values, rows of the lower triangle

Nothing may follow the last template.  Template payloads are stored at full
64-bit precision (unlike the 32-bit embedding files): galleries are few and
precision-critical, and the bit-exact round trip means a reloaded gallery
reproduces every distance to the last ULP.  Writes go to a temp file in the
same directory followed by an atomic rename.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_bytes
from .errors import (
    DimensionError,
    DuplicateIdentityError,
    EmptyGalleryError,
    FacedimError,
    FormatError,
    ModelMismatchError,
    TruncationError,
    UnknownIdentityError,
    VersionError,
)
from .template import (
    DEFAULT_EPSILON,
    Embedding,
    EmbeddingSet,
    GaussianTemplate,
    fit_template,
    mahalanobis,
)

MAGIC = b"FTPL1"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<5sHd")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_TEMPLATE_FIXED = struct.Struct("<IId")  # d, sample_count, epsilon


@dataclass
class Gallery:
    """Enrollment store mapping identity_id to its fitted template.

    All templates share one backbone (``model_id``) and one dimension.
    Reads (verify/identify) are safe from any number of threads; enroll and
    load require exclusive access.
    """

    model_id: str
    templates: dict[str, GaussianTemplate] = field(default_factory=dict)
    created_at: float = field(default_factory=time.time)
    format_version: int = FORMAT_VERSION

    def __len__(self) -> int:
        return len(self.templates)

    @property
    def dim(self) -> int | None:
        """Template dimension, or None while the gallery is empty."""
        for template in self.templates.values():
            return template.dim
        return None

    def identities(self) -> list[str]:
        return sorted(self.templates)


@dataclass(frozen=True)
class VerificationResult:
    """Outcome of scoring one probe against one claimed identity."""

    identity_id: str
    distance: float
    threshold: float
    accepted: bool

    def __post_init__(self) -> None:
        if self.distance < 0.0 or self.threshold < 0.0:
            raise ValueError("distance and threshold must be nonnegative")
        if self.accepted != (self.distance <= self.threshold):
            raise ValueError("accepted must equal (distance <= threshold)")


def enroll(
    gallery: Gallery,
    identity_id: str,
    samples: EmbeddingSet,
    epsilon: float = DEFAULT_EPSILON,
    overwrite: bool = False,
) -> Gallery:
    """Fit a template for ``identity_id`` and add it to the gallery.

    Raises:
        DuplicateIdentityError: identity already enrolled and not ``overwrite``.
        ModelMismatchError: samples came from a different backbone.
        DimensionError: samples disagree with the gallery's dimension.
    """
    if identity_id in gallery.templates and not overwrite:
        raise DuplicateIdentityError(
            f"{identity_id!r} is already enrolled; pass overwrite to replace it"
        )
    if samples.model_id != gallery.model_id:
        raise ModelMismatchError(
            f"samples from model {samples.model_id!r} cannot enroll into a "
            f"gallery for model {gallery.model_id!r}"
        )
    dim = gallery.dim
    if dim is not None and samples.dim != dim:
        raise DimensionError(
            f"samples of dimension {samples.dim} cannot join a gallery of dimension {dim}"
        )
    gallery.templates[identity_id] = fit_template(samples, identity_id, epsilon)
    return gallery


def verify(
    gallery: Gallery, identity_id: str, probe: Embedding, threshold: float
) -> VerificationResult:
    """Score a probe against one claimed identity; accept iff distance <= threshold."""
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    template = gallery.templates.get(identity_id)
    if template is None:
        raise UnknownIdentityError(f"{identity_id!r} is not enrolled")
    distance = mahalanobis(template, probe)
    return VerificationResult(identity_id, distance, threshold, distance <= threshold)


def identify(gallery: Gallery, probe: Embedding) -> list[tuple[str, float]]:
    """Distances of a probe to every enrolled identity, closest first.

    Ties are broken by identity_id so the ordering is fully deterministic.
    """
    if not gallery.templates:
        raise EmptyGalleryError("cannot identify against an empty gallery")
    pairs = [
        (identity, mahalanobis(template, probe))
        for identity, template in sorted(gallery.templates.items())
    ]
    pairs.sort(key=lambda pair: (pair[1], pair[0]))
    return pairs


def _pack_str(value: str, what: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise FormatError(f"{what} is too long to serialize ({len(raw)} bytes)")
    return _U16.pack(len(raw)) + raw


def save_gallery(gallery: Gallery, path: Path | str) -> None:
    """Serialize the gallery in the FTPL1 layout (atomic write)."""
    parts = [
        _HEADER.pack(MAGIC, gallery.format_version, gallery.created_at),
        _pack_str(gallery.model_id, "model_id"),
        _U32.pack(len(gallery.templates)),
    ]
    for identity, template in gallery.templates.items():
        d = template.dim
        parts.append(_pack_str(identity, "identity_id"))
        parts.append(_TEMPLATE_FIXED.pack(d, template.sample_count, template.epsilon))
        parts.append(template.mean.astype("<f8").tobytes())
        parts.append(template.chol_lower[np.tril_indices(d)].astype("<f8").tobytes())
    atomic_write_bytes(path, b"".join(parts))


class _Cursor:
    """Sequential reader that refuses to run past the end of the buffer."""

    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncationError(
                f"{self.path}: file ends {self.offset + n - len(self.data)} bytes early"
            )
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def take_str(self, what: str) -> str:
        (length,) = _U16.unpack(self.take(_U16.size))
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.path}: {what} is not valid UTF-8") from exc

    def done(self) -> bool:
        return self.offset == len(self.data)


def load_gallery(path: Path | str) -> Gallery:
    """Read an FTPL1 gallery file.

    Raises:
        FormatError: bad magic, malformed strings, corrupt template payload,
            or trailing bytes.
        VersionError: written by an unsupported format version.
        TruncationError: file ends early.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic, not an FTPL1 file")
    cursor = _Cursor(data, path)
    _, version, created_at = _HEADER.unpack(cursor.take(_HEADER.size))
    if version != FORMAT_VERSION:
        raise VersionError(
            f"{path}: format version {version}, this build reads {FORMAT_VERSION}"
        )
    model_id = cursor.take_str("model_id")
    (count,) = _U32.unpack(cursor.take(_U32.size))
    templates: dict[str, GaussianTemplate] = {}
    for _ in range(count):
        identity = cursor.take_str("identity_id")
        d, sample_count, epsilon = _TEMPLATE_FIXED.unpack(
            cursor.take(_TEMPLATE_FIXED.size)
        )
        if d < 1:
            raise FormatError(f"{path}: template {identity!r} has dimension {d}")
        mean = np.frombuffer(cursor.take(8 * d), dtype="<f8").astype(np.float64)
        packed = np.frombuffer(
            cursor.take(8 * d * (d + 1) // 2), dtype="<f8"
        ).astype(np.float64)
        chol = np.zeros((d, d))
        chol[np.tril_indices(d)] = packed
        try:
            template = GaussianTemplate(
                identity_id=identity,
                mean=mean,
                chol_lower=chol,
                epsilon=epsilon,
                sample_count=sample_count,
                model_id=model_id,
            )
        except (FacedimError, ValueError) as exc:
            raise FormatError(f"{path}: corrupt template {identity!r}: {exc}") from exc
        if identity in templates:
            raise FormatError(f"{path}: duplicate identity {identity!r}")
        templates[identity] = template
    if not cursor.done():
        raise FormatError(
            f"{path}: {len(data) - cursor.offset} trailing bytes after last template"
        )
    return Gallery(
        model_id=model_id,
        templates=templates,
        created_at=created_at,
        format_version=version,
    )
