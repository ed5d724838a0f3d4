"""Rendering of evaluation figures next to the delimited report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport


def render_report_figures(report: EvalReport, report_path: Path | str) -> list[Path]:
    """Save two PNG figures alongside the report CSV.

    ``<stem>_far_frr.png`` shows both error rates against the threshold with
    the equal-error operating point marked; ``<stem>_det.png`` shows the
    FRR-vs-FAR trade-off curve.  Returns the paths written.
    """
    report_path = Path(report_path)
    base = report_path.with_suffix("") if report_path.suffix == ".csv" else report_path
    thresholds = [p.threshold for p in report.curve]
    far = [p.far for p in report.curve]
    frr = [p.frr for p in report.curve]

    rates_path = Path(f"{base}_far_frr.png")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(thresholds, far, label="FAR", color="tab:red")
    ax.plot(thresholds, frr, label="FRR", color="tab:blue")
    ax.axvline(report.threshold_at_eer, color="gray", linestyle="--", linewidth=1)
    ax.plot(
        [report.threshold_at_eer],
        [report.eer],
        "ko",
        markersize=5,
        label=f"EER = {report.eer:.4f}",
    )
    ax.set_xlabel("distance threshold")
    ax.set_ylabel("error rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="center right")
    ax.set_title("Acceptance vs. rejection errors across thresholds")
    fig.tight_layout()
    fig.savefig(rates_path, dpi=120)
    plt.close(fig)

    det_path = Path(f"{base}_det.png")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(far, frr, color="tab:purple")
    ax.plot([report.far_at_threshold], [report.frr_at_threshold], "ko", markersize=5)
    ax.set_xlabel("FAR")
    ax.set_ylabel("FRR")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_aspect("equal")
    ax.set_title("Detection error trade-off")
    fig.tight_layout()
    fig.savefig(det_path, dpi=120)
    plt.close(fig)

    return [rates_path, det_path]
