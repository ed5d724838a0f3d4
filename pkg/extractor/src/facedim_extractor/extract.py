"""Directory-of-images to FEDM1: the embedding extraction step.

Input layout is one subdirectory per identity, holding PNG shots:

    images/
      cow-01/a.png b.png ...
      cow-02/...

Each image becomes one embedding row; labels come from the subdirectory
names and are written to the ``.labels`` sidecar.  Inference runs in eval
mode under ``no_grad``, so repeated extraction of the same images with the
same weights is bit-identical.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .backbones import EmbeddingModel
from .detection import best_box
from .writer import write_fedm1

logger = logging.getLogger(__name__)


def list_labeled_images(images_dir: Path | str) -> list[tuple[str, Path]]:
    """(label, path) pairs: identities sorted, then filenames sorted."""
    images_dir = Path(images_dir)
    pairs = [
        (identity_dir.name, png)
        for identity_dir in sorted(p for p in images_dir.iterdir() if p.is_dir())
        for png in sorted(identity_dir.glob("*.png"))
    ]
    if not pairs:
        raise ValueError(f"no identity subdirectories with PNG images under {images_dir}")
    return pairs


def _load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def _embed_images(
    model: EmbeddingModel,
    labeled: list[tuple[str, Path]],
    crop_for: dict[Path, tuple[int, int, int, int]] | None = None,
) -> np.ndarray:
    rows = np.empty((len(labeled), model.dim), dtype=np.float32)
    for i, (_, path) in enumerate(labeled):
        pixels = _load_rgb(path)
        if crop_for and path in crop_for:
            x, y, w, h = crop_for[path]
            height, width = pixels.shape[:2]
            x1, y1 = min(x + w, width), min(y + h, height)
            if x < x1 and y < y1:
                pixels = pixels[y:y1, x:x1, :]
        batch = model.preprocess(pixels)
        rows[i] = model.embed(batch).numpy()[0]
    return rows


def extract(images_dir: Path | str, model: EmbeddingModel, out_path: Path | str) -> int:
    """Embed every image and write a labeled FEDM1 file; returns the row count."""
    labeled = list_labeled_images(images_dir)
    rows = _embed_images(model, labeled)
    write_fedm1(rows, model.model_id, out_path, labels=[lab for lab, _ in labeled])
    return len(labeled)


def extract_with_detection(
    images_dir: Path | str,
    model: EmbeddingModel,
    detector_url: str,
    out_path: Path | str,
    min_confidence: float = 0.5,
    auth_token: str | None = None,
) -> int:
    """Like extract, but crops each image to its best detection first.

    Images with no detection above the confidence floor are embedded whole,
    matching the verification core's fallback.
    """
    labeled = list_labeled_images(images_dir)
    crops: dict[Path, tuple[int, int, int, int]] = {}
    for _, path in labeled:
        box = best_box(
            path.read_bytes(), detector_url,
            min_confidence=min_confidence, auth_token=auth_token,
        )
        if box is None:
            logger.warning("%s: no detection above %.2f; embedding the whole image",
                           path, min_confidence)
        else:
            crops[path] = box
    rows = _embed_images(model, labeled, crop_for=crops)
    write_fedm1(rows, model.model_id, out_path, labels=[lab for lab, _ in labeled])
    return len(labeled)
