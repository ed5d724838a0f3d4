"""Command-line pipeline: augment, enroll, verify, identify, evaluate.

Exit codes are a stable scripting contract: 0 for success (and for "every
probe accepted" in verify), 1 when verify rejects at least one probe, 2 for
any error, including usage errors.
"""

from __future__ import annotations

import os
import shutil
import sys
from collections import defaultdict
from pathlib import Path

import click
import numpy as np

from ._io import atomic_write_bytes
from .augment import AugmentConfig, apply_transform, sample_params
from .detector import DetectorConfig, detect_and_crop
from .errors import FacedimError
from .evaluation import evaluate_scores, export_report, score_matrix
from .gallery import Gallery, enroll, identify, load_gallery, save_gallery, verify
from .ingest import read_embeddings, read_embeddings_csv, read_image, write_image
from .template import DEFAULT_EPSILON, EmbeddingSet

DETECTOR_TOKEN_ENV = "FACEDIM_DETECTOR_TOKEN"

MANIFEST_HEADER = (
    "source,output,scale,angle_deg,tx_frac,ty_frac,shift0,shift1,shift2,contrast"
)


class RangeType(click.ParamType):
    """Accepts a numeric range written as ``lo:hi``."""

    name = "lo:hi"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        lo, sep, hi = str(value).partition(":")
        if not sep:
            self.fail(f"{value!r} is not in lo:hi form", param, ctx)
        try:
            return (float(lo), float(hi))
        except ValueError:
            self.fail(f"{value!r} is not in lo:hi form", param, ctx)


RANGE = RangeType()


@click.group()
def cli() -> None:
    """Few-shot face verification over Gaussian embedding templates."""


def _load_probes(path: Path, model_id: str | None, gallery: Gallery) -> EmbeddingSet:
    # CSV carries no model metadata; unless overridden, loading it for a
    # gallery asserts it belongs to that gallery's backbone.
    if path.suffix.lower() == ".csv":
        return read_embeddings_csv(path, model_id if model_id is not None else gallery.model_id)
    return read_embeddings(path)


@cli.command("augment")
@click.option("--images-dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True, help="Directory of per-identity subdirectories of PNG shots.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Destination for augmented images and manifest.csv.")
@click.option("--n-augment", type=int, default=100, show_default=True,
              help="Augmentations per input image.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the parameter stream.")
@click.option("--scale-range", type=RANGE, default="0.9:1.1", show_default=True)
@click.option("--angle-range", type=RANGE, default="-15:15", show_default=True)
@click.option("--translate-range", type=RANGE, default="-0.1:0.1", show_default=True)
@click.option("--color-range", type=RANGE, default="-0.1:0.1", show_default=True)
@click.option("--contrast-range", type=RANGE, default="0.8:1.2", show_default=True)
@click.option("--detector-url", default=None,
              help="Face-detection endpoint; when set, shots are cropped before augmenting.")
@click.option("--min-confidence", type=float, default=0.5, show_default=True,
              help="Confidence floor for detector boxes.")
def cmd_augment(images_dir, out_dir, n_augment, seed, scale_range, angle_range,
                translate_range, color_range, contrast_range, detector_url,
                min_confidence):
    """Expand few-shot PNG directories by N augmentations per image."""
    if n_augment < 1:
        raise click.UsageError("--n-augment must be at least 1")
    config = AugmentConfig(
        scale_range=scale_range,
        angle_range_deg=angle_range,
        translate_frac_range=translate_range,
        color_shift_range=color_range,
        contrast_range=contrast_range,
        seed=seed,
    )
    sources = [
        (identity_dir.name, png)
        for identity_dir in sorted(p for p in images_dir.iterdir() if p.is_dir())
        for png in sorted(identity_dir.glob("*.png"))
    ]
    if not sources:
        raise click.UsageError(
            f"no identity subdirectories with PNG images under {images_dir}"
        )
    detector_config = None
    if detector_url:
        detector_config = DetectorConfig(
            endpoint_url=detector_url,
            min_confidence=min_confidence,
            auth_token=os.environ.get(DETECTOR_TOKEN_ENV),
        )

    params = sample_params(config, len(sources) * n_augment)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_lines = [MANIFEST_HEADER]
    written = 0
    for i, (identity, source) in enumerate(sources):
        image = read_image(source)
        working = image
        if detector_config is not None:
            working = detect_and_crop(image, source.read_bytes(), detector_config)
        (out_dir / identity).mkdir(parents=True, exist_ok=True)
        for j in range(n_augment):
            p = params[i * n_augment + j]
            out_path = out_dir / identity / f"{source.stem}_aug{j:04d}.png"
            if p.is_identity() and working is image:
                # exact identity transform on an uncropped source: the output
                # is the input, byte for byte
                shutil.copyfile(source, out_path)
            else:
                write_image(apply_transform(working, p), out_path)
            fields = (p.scale, p.angle_deg, p.tx_frac, p.ty_frac, *p.color_shift, p.contrast)
            manifest_lines.append(
                f"{identity}/{source.name},{identity}/{out_path.name},"
                + ",".join(f"{v:.17g}" for v in fields)
            )
            written += 1
    atomic_write_bytes(out_dir / "manifest.csv", ("\n".join(manifest_lines) + "\n").encode("utf-8"))
    click.echo(f"{written} augmented images written to {out_dir}")


@cli.command("enroll")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Labeled FEDM1 file (with .labels sidecar) or CSV with a label column.")
@click.option("--gallery", "gallery_path", type=click.Path(dir_okay=False, path_type=Path),
              required=True, help="Output FTPL1 gallery file.")
@click.option("--epsilon", type=float, default=DEFAULT_EPSILON, show_default=True,
              help="Diagonal covariance regularization.")
@click.option("--model-id", default=None,
              help="Backbone tag for CSV input (FEDM1 carries its own).")
def cmd_enroll(embeddings, gallery_path, epsilon, model_id):
    """Fit one template per distinct label and write the gallery."""
    if embeddings.suffix.lower() == ".csv":
        embedding_set = read_embeddings_csv(embeddings, model_id if model_id is not None else "")
    else:
        embedding_set = read_embeddings(embeddings)
    if embedding_set.source_labels is None:
        raise click.UsageError(
            f"{embeddings} carries no identity labels "
            "(expected a .labels sidecar or a CSV 'label' column)"
        )
    groups: dict[str, list[int]] = defaultdict(list)
    for index, label in enumerate(embedding_set.source_labels):
        groups[label].append(index)
    gallery = Gallery(model_id=embedding_set.model_id)
    for identity in sorted(groups):
        subset = EmbeddingSet(
            embedding_set.rows[np.asarray(groups[identity])], embedding_set.model_id
        )
        enroll(gallery, identity, subset, epsilon)
        click.echo(f"{identity},{subset.count}")
    save_gallery(gallery, gallery_path)
    click.echo(f"enrolled {len(gallery)} identities -> {gallery_path}")


@cli.command("verify")
@click.option("--gallery", "gallery_path", type=click.Path(dir_okay=False, path_type=Path),
              required=True)
@click.option("--probes", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="FEDM1 or CSV file of probe embeddings.")
@click.option("--identity", required=True, help="Claimed identity to verify against.")
@click.option("--threshold", type=float, required=True,
              help="Accept when distance <= threshold.")
@click.option("--model-id", default=None,
              help="Backbone tag for CSV probes (defaults to the gallery's).")
def cmd_verify(gallery_path, probes, identity, threshold, model_id):
    """Score each probe against one identity; exit 0 only if all accept."""
    gallery = load_gallery(gallery_path)
    probe_set = _load_probes(probes, model_id, gallery)
    all_accepted = True
    for i in range(probe_set.count):
        result = verify(gallery, identity, probe_set.row(i), threshold)
        flag = "true" if result.accepted else "false"
        click.echo(f"{result.identity_id},{result.distance:.17g},{flag}")
        all_accepted = all_accepted and result.accepted
    sys.exit(0 if all_accepted else 1)


@cli.command("identify")
@click.option("--gallery", "gallery_path", type=click.Path(dir_okay=False, path_type=Path),
              required=True)
@click.option("--probes", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True)
@click.option("--model-id", default=None,
              help="Backbone tag for CSV probes (defaults to the gallery's).")
def cmd_identify(gallery_path, probes, model_id):
    """Rank every enrolled identity per probe, closest first."""
    gallery = load_gallery(gallery_path)
    probe_set = _load_probes(probes, model_id, gallery)
    for i in range(probe_set.count):
        for rank, (identity, distance) in enumerate(identify(gallery, probe_set.row(i)), 1):
            click.echo(f"{i},{rank},{identity},{distance:.17g}")


@cli.command("evaluate")
@click.option("--gallery", "gallery_path", type=click.Path(dir_okay=False, path_type=Path),
              required=True)
@click.option("--probes", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Labeled FEDM1 or CSV file of test embeddings.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path),
              required=True, help="Output CSV; a .summary.json sidecar is written next to it.")
@click.option("--plot/--no-plot", default=True, show_default=True,
              help="Also render FAR/FRR figures next to the report.")
@click.option("--model-id", default=None,
              help="Backbone tag for CSV probes (defaults to the gallery's).")
def cmd_evaluate(gallery_path, probes, report_path, plot, model_id):
    """Sweep thresholds over labeled probes and report the EER."""
    gallery = load_gallery(gallery_path)
    probe_set = _load_probes(probes, model_id, gallery)
    if probe_set.source_labels is None:
        raise click.UsageError(
            f"{probes} carries no identity labels "
            "(expected a .labels sidecar or a CSV 'label' column)"
        )
    scores = score_matrix(gallery, probe_set)
    report = evaluate_scores(scores)
    export_report(report, report_path)
    if plot:
        from .report import render_report_figures  # deferred: pulls in matplotlib

        for figure in render_report_figures(report, report_path):
            click.echo(f"figure written: {figure}")
    click.echo(f"EER={report.eer:.6f} at threshold={report.threshold_at_eer:.9g}")


def main(argv: list[str] | None = None) -> None:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except FacedimError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
