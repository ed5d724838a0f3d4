"""Command line for the embedding extractor."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .backbones import SUPPORTED_BACKBONES, load_backbone
from .errors import ExtractorError
from .extract import extract, extract_with_detection


@click.group()
def cli() -> None:
    """Turn directories of face images into FEDM1 embedding files."""


@cli.command("extract")
@click.option("--backbone", required=True, type=click.Choice(SUPPORTED_BACKBONES),
              help="Backbone CNN producing the embeddings.")
@click.option("--images", "images_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of per-identity subdirectories of PNGs.")
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False, path_type=Path),
              help="Output FEDM1 file (a .labels sidecar is written next to it).")
@click.option("--layer", default=None,
              help="Embedding graph node (defaults to the last pre-classification layer).")
@click.option("--detector-url", default=None,
              help="Face-detection endpoint; when set, images are cropped before embedding.")
@click.option("--min-confidence", type=float, default=0.5, show_default=True)
@click.option("--pretrained/--random-init", default=True, show_default=True,
              help="Load published weights, or build a seeded random-init model "
                   "(for offline format testing).")
def cmd_extract(backbone, images_dir, out_path, layer, detector_url,
                min_confidence, pretrained):
    """Embed every image; labels come from the subdirectory names."""
    model = load_backbone(backbone, embedding_layer=layer, pretrained=pretrained)
    if detector_url:
        count = extract_with_detection(
            images_dir, model, detector_url, out_path,
            min_confidence=min_confidence,
            auth_token=os.environ.get("FACEDIM_DETECTOR_TOKEN"),
        )
    else:
        count = extract(images_dir, model, out_path)
    click.echo(f"{count} embeddings of width {model.dim} ({model.model_id}) -> {out_path}")


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except ExtractorError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
