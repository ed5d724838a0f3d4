"""Deterministic, seeded augmentation of decoded images.

A small set of enrollment shots is expanded by sampling random transforms and
applying them in a pinned order:

1. geometric warp: scale about the image center, rotation about the center,
   then translation, resolved in a single bilinear resampling pass with edge
   pixels replicated outside the frame;
2. contrast: ``p -> (p - 0.5) * contrast + 0.5`` per channel;
3. color shift: ``p_k -> p_k + shift_k`` per channel;
4. clamp to [0, 1].

Parameters are drawn from a SplitMix64 stream seeded by the configuration, so
a given (config, n) pair yields the same parameter list on every platform and
in every release.  Identity parameters short-circuit each stage, making the
identity transform an exact no-op rather than a resampling round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

DEFAULT_SCALE_RANGE = (0.9, 1.1)
DEFAULT_ANGLE_RANGE_DEG = (-15.0, 15.0)
DEFAULT_TRANSLATE_FRAC_RANGE = (-0.1, 0.1)
DEFAULT_COLOR_SHIFT_RANGE = (-0.1, 0.1)
DEFAULT_CONTRAST_RANGE = (0.8, 1.2)

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 pseudo-random generator (Steele, Lea & Flood 2014).

    The same tiny counter-based mixer used as the seeder in Java's
    SplittableRandom and the xoshiro family.  Kept in-repo because enrolled
    templates depend on the parameter stream never changing underneath them.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform draw in [lo, hi); returns exactly ``lo`` when lo == hi."""
        u = (self.next_uint64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u


@dataclass(frozen=True)
class ImageTensor:
    """Decoded image: (h, w, c) float64 pixels in [0, 1], c in {1, 3}."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[0] < 1 or px.shape[1] < 1 or px.shape[2] not in (1, 3):
            raise ShapeError(
                f"pixels must have shape (h, w, c) with h, w >= 1 and c in {{1, 3}}, "
                f"got {px.shape}"
            )
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel values must be finite")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class AugmentationParams:
    """One sampled transform.

    ``color_shift`` always carries three channel offsets; single-channel
    images use only the first entry.
    """

    scale: float
    angle_deg: float
    tx_frac: float
    ty_frac: float
    color_shift: tuple[float, float, float]
    contrast: float

    def is_identity(self) -> bool:
        return (
            self.is_geometric_identity()
            and self.contrast == 1.0
            and all(s == 0.0 for s in self.color_shift)
        )

    def is_geometric_identity(self) -> bool:
        return (
            self.scale == 1.0
            and self.angle_deg == 0.0
            and self.tx_frac == 0.0
            and self.ty_frac == 0.0
        )


IDENTITY_PARAMS = AugmentationParams(1.0, 0.0, 0.0, 0.0, (0.0, 0.0, 0.0), 1.0)


def _check_range(name: str, rng: tuple[float, float], positive: bool = False) -> None:
    lo, hi = rng
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError(f"{name} must be finite, got {rng}")
    if lo > hi:
        raise ConfigError(f"{name} must satisfy lo <= hi, got {rng}")
    if positive and lo <= 0.0:
        raise ConfigError(f"{name} must be strictly positive, got {rng}")


@dataclass(frozen=True)
class AugmentConfig:
    """Sampling ranges for each transform field plus the stream seed."""

    scale_range: tuple[float, float] = DEFAULT_SCALE_RANGE
    angle_range_deg: tuple[float, float] = DEFAULT_ANGLE_RANGE_DEG
    translate_frac_range: tuple[float, float] = DEFAULT_TRANSLATE_FRAC_RANGE
    color_shift_range: tuple[float, float] = DEFAULT_COLOR_SHIFT_RANGE
    contrast_range: tuple[float, float] = DEFAULT_CONTRAST_RANGE
    seed: int = 0

    def __post_init__(self) -> None:
        _check_range("scale_range", self.scale_range, positive=True)
        _check_range("angle_range_deg", self.angle_range_deg)
        _check_range("translate_frac_range", self.translate_frac_range)
        _check_range("color_shift_range", self.color_shift_range)
        _check_range("contrast_range", self.contrast_range, positive=True)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")


def sample_params(config: AugmentConfig, n: int) -> list[AugmentationParams]:
    """Draw ``n`` parameter vectors from one stream seeded by ``config.seed``.

    Each field is uniform over its configured range; the per-vector draw
    order is fixed: scale, angle, tx, ty, the three color shifts, contrast.
    The same (config, n) always yields a bit-identical list.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = SplitMix64(config.seed)
    out = []
    for _ in range(n):
        scale = rng.uniform(*config.scale_range)
        angle = rng.uniform(*config.angle_range_deg)
        tx = rng.uniform(*config.translate_frac_range)
        ty = rng.uniform(*config.translate_frac_range)
        shift = tuple(rng.uniform(*config.color_shift_range) for _ in range(3))
        contrast = rng.uniform(*config.contrast_range)
        out.append(AugmentationParams(scale, angle, tx, ty, shift, contrast))
    return out


def _warp(px: np.ndarray, params: AugmentationParams) -> np.ndarray:
    """Affine warp by inverse mapping with bilinear sampling, edges replicated.

    Forward map (pixel-center coordinates, y down): scale by ``s`` and rotate
    by ``angle_deg`` counterclockwise about the image center, then translate
    by (tx_frac * w, ty_frac * h).
    """
    h, w = px.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    theta = math.radians(params.angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    inv_scale = 1.0 / params.scale
    tx, ty = params.tx_frac * w, params.ty_frac * h

    yo, xo = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    dx = xo - cx - tx
    dy = yo - cy - ty
    xi = (cos_t * dx + sin_t * dy) * inv_scale + cx
    yi = (-sin_t * dx + cos_t * dy) * inv_scale + cy

    xi = np.clip(xi, 0.0, w - 1.0)
    yi = np.clip(yi, 0.0, h - 1.0)
    x0 = np.floor(xi).astype(np.intp)
    y0 = np.floor(yi).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xi - x0)[..., None]
    fy = (yi - y0)[..., None]

    top = px[y0, x0] * (1.0 - fx) + px[y0, x1] * fx
    bottom = px[y1, x0] * (1.0 - fx) + px[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def apply_transform(image: ImageTensor, params: AugmentationParams) -> ImageTensor:
    """Apply one sampled transform: warp, then contrast, then color shift.

    Stages whose parameters are the identity are skipped outright, so
    identity params return the input image exactly, with no interpolation or
    rounding drift.  Output dimensions always equal input dimensions and
    values are clamped to [0, 1].
    """
    px = image.pixels
    out = px if params.is_geometric_identity() else _warp(px, params)
    if params.contrast != 1.0:
        out = (out - 0.5) * params.contrast + 0.5
    shift = params.color_shift[: image.channels]
    if any(s != 0.0 for s in shift):
        out = out + np.asarray(shift, dtype=np.float64)
    if out is px:
        return image
    return ImageTensor(np.clip(out, 0.0, 1.0))


def augment_set(
    images: list[ImageTensor], config: AugmentConfig, n_per_image: int
) -> list[ImageTensor]:
    """Expand M images into M * N augmented images.

    One parameter stream seeded by ``config.seed`` supplies every image with
    its own block of N fresh parameter vectors; output index ``i * N + j``
    is image ``i`` under its j-th parameters.  Deterministic for fixed
    inputs.

    Raises:
        ShapeError: the images do not all share one shape.
    """
    if len(images) < 1:
        raise ValueError("need at least one image")
    if n_per_image < 1:
        raise ValueError("n_per_image must be at least 1")
    shapes = {im.pixels.shape for im in images}
    if len(shapes) > 1:
        raise ShapeError(f"images have heterogeneous shapes: {sorted(shapes)}")
    params = sample_params(config, len(images) * n_per_image)
    return [
        apply_transform(image, params[i * n_per_image + j])
        for i, image in enumerate(images)
        for j in range(n_per_image)
    ]
