"""FAR/FRR sweeps and the equal-error operating point.

Distances play the role of scores with accept-if-small semantics: a probe is
accepted at threshold ``t`` iff its distance is <= t.  At each threshold

    FAR(t) = |{impostor <= t}| / |impostor|     (accepted impostors)
    FRR(t) = |{genuine  >  t}| / |genuine|      (rejected genuines)

Candidate thresholds are the midpoints between consecutive distinct values of
the pooled score list, plus one sentinel below the minimum and one above the
maximum.  That finite set realizes every achievable (FAR, FRR) pair, so the
equal-error search is exact: the operating point minimizes |FAR - FRR|, ties
broken by smaller (FAR + FRR) / 2, then by smaller threshold, and the
reported EER is the mean of FAR and FRR there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._io import atomic_write_bytes
from .errors import (
    InsufficientScoresError,
    InvalidCurveError,
    MissingLabelError,
    UnknownIdentityError,
)
from .gallery import Gallery
from .template import EmbeddingSet, batch_mahalanobis


def _score_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} scores must be a 1-D vector, got shape {arr.shape}")
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0):
        raise ValueError(f"{name} scores must be finite and nonnegative")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScoreSet:
    """Labeled distances: probes against their own identity vs. all others."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "genuine", _score_vector(self.genuine, "genuine"))
        object.__setattr__(self, "impostor", _score_vector(self.impostor, "impostor"))


class CurvePoint(NamedTuple):
    threshold: float
    far: float
    frr: float


class EerResult(NamedTuple):
    eer: float
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class EvalReport:
    """Full evaluation output: the curve, the operating point, and counts."""

    eer: float
    threshold_at_eer: float
    far_at_threshold: float
    frr_at_threshold: float
    curve: tuple[CurvePoint, ...]
    counts: tuple[int, int]  # (n_genuine, n_impostor)

    def __post_init__(self) -> None:
        if self.eer != (self.far_at_threshold + self.frr_at_threshold) / 2.0:
            raise ValueError("eer must equal the mean of far and frr at the threshold")
        _validate_curve(self.curve)


def score_matrix(gallery: Gallery, probes: EmbeddingSet) -> ScoreSet:
    """Score every labeled probe against every enrolled template.

    A probe's distance to its own identity goes to ``genuine``; its distances
    to every other enrolled identity go to ``impostor``.  Both vectors are
    ordered by probe index first, then identity_id, so output is
    deterministic.

    Raises:
        MissingLabelError: probes carry no labels.
        UnknownIdentityError: a probe label that is not enrolled.
    """
    if probes.source_labels is None:
        raise MissingLabelError("probes must carry identity labels")
    identities = gallery.identities()
    enrolled = set(identities)
    missing = sorted({lab for lab in probes.source_labels if lab not in enrolled})
    if missing:
        raise UnknownIdentityError(f"probe labels not enrolled: {', '.join(missing)}")
    distances = {
        identity: batch_mahalanobis(gallery.templates[identity], probes)
        for identity in identities
    }
    genuine: list[float] = []
    impostor: list[float] = []
    for index, label in enumerate(probes.source_labels):
        for identity in identities:
            value = distances[identity][index]
            if identity == label:
                genuine.append(value)
            else:
                impostor.append(value)
    return ScoreSet(np.asarray(genuine), np.asarray(impostor))


def far_frr_curve(scores: ScoreSet) -> list[CurvePoint]:
    """Sweep every achievable operating point of a score set.

    Raises:
        InsufficientScoresError: either score list is empty.
    """
    if scores.genuine.size == 0 or scores.impostor.size == 0:
        raise InsufficientScoresError(
            "need both genuine and impostor scores "
            f"(got {scores.genuine.size} genuine, {scores.impostor.size} impostor)"
        )
    genuine = np.sort(scores.genuine)
    impostor = np.sort(scores.impostor)
    pooled = np.unique(np.concatenate([genuine, impostor]))
    lo = pooled[0] - 1.0
    if lo >= pooled[0]:
        lo = np.nextafter(pooled[0], -np.inf)
    hi = pooled[-1] + 1.0
    if hi <= pooled[-1]:
        hi = np.nextafter(pooled[-1], np.inf)
    thresholds = np.concatenate([[lo], (pooled[:-1] + pooled[1:]) / 2.0, [hi]])
    far = np.searchsorted(impostor, thresholds, side="right") / impostor.size
    frr = (genuine.size - np.searchsorted(genuine, thresholds, side="right")) / genuine.size
    return [
        CurvePoint(float(t), float(a), float(r))
        for t, a, r in zip(thresholds, far, frr)
    ]


def _validate_curve(curve) -> None:
    if not curve:
        raise InvalidCurveError("curve is empty")
    previous: CurvePoint | None = None
    for point in curve:
        if not (0.0 <= point.far <= 1.0 and 0.0 <= point.frr <= 1.0):
            raise InvalidCurveError(f"rates outside [0, 1] at threshold {point.threshold}")
        if not np.isfinite(point.threshold):
            raise InvalidCurveError("non-finite threshold")
        if previous is not None:
            if point.threshold <= previous.threshold:
                raise InvalidCurveError("thresholds must be strictly increasing")
            if point.far < previous.far:
                raise InvalidCurveError("FAR must be non-decreasing in the threshold")
            if point.frr > previous.frr:
                raise InvalidCurveError("FRR must be non-increasing in the threshold")
        previous = point


def eer(curve: list[CurvePoint]) -> EerResult:
    """Equal-error operating point of a FAR/FRR curve.

    Picks the threshold minimizing |FAR - FRR|, breaking ties by smaller
    (FAR + FRR) / 2 and then by smaller threshold; the EER is the mean of the
    two rates there.

    Raises:
        InvalidCurveError: empty or non-monotone curve.
    """
    _validate_curve(curve)
    best = min(
        curve,
        key=lambda p: (abs(p.far - p.frr), (p.far + p.frr) / 2.0, p.threshold),
    )
    return EerResult((best.far + best.frr) / 2.0, best.threshold, best.far, best.frr)


def evaluate_scores(scores: ScoreSet) -> EvalReport:
    """Curve plus operating point in one report."""
    curve = far_frr_curve(scores)
    operating = eer(curve)
    return EvalReport(
        eer=operating.eer,
        threshold_at_eer=operating.threshold,
        far_at_threshold=operating.far,
        frr_at_threshold=operating.frr,
        curve=tuple(curve),
        counts=(int(scores.genuine.size), int(scores.impostor.size)),
    )


def summary_path_for(report_path: Path | str) -> Path:
    """Sidecar summary location: ``report.csv`` maps to ``report.summary.json``."""
    report_path = Path(report_path)
    if report_path.suffix == ".csv":
        return report_path.with_suffix(".summary.json")
    return Path(str(report_path) + ".summary.json")


def export_report(report: EvalReport, path: Path | str) -> None:
    """Write the curve as CSV plus a single-object JSON summary sidecar.

    The CSV holds ``threshold,far,frr`` rows printed at 17 significant
    digits, enough to reproduce every float64 exactly.
    """
    path = Path(path)
    lines = ["threshold,far,frr"]
    lines += [f"{p.threshold:.17g},{p.far:.17g},{p.frr:.17g}" for p in report.curve]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))

    summary = {
        "eer": report.eer,
        "threshold_at_eer": report.threshold_at_eer,
        "far_at_threshold": report.far_at_threshold,
        "frr_at_threshold": report.frr_at_threshold,
        "n_genuine": report.counts[0],
        "n_impostor": report.counts[1],
    }
    atomic_write_bytes(
        summary_path_for(path), (json.dumps(summary, indent=2) + "\n").encode("utf-8")
    )
