"""Acceptance suite: one test per release criterion.

Each test prints a ``[criterion N] ...: PASS`` line on success (run with
``pytest -s`` to see them even when everything is green).  Tolerances are
pinned here, not configurable.  Expected values come from the independent
oracles in ``oracles.py`` or from closed-form distribution facts.
"""

import json
import time

import numpy as np
import pytest

from facedim.augment import AugmentConfig, ImageTensor, sample_params
from facedim.cli import main
from facedim.detector import BoundingBox, DetectorConfig, detect_and_crop, detect_faces
from facedim.errors import ProtocolError, ServiceError
from facedim.evaluation import ScoreSet, eer, far_frr_curve, score_matrix
from facedim.gallery import Gallery, enroll, load_gallery, save_gallery
from facedim.ingest import read_embeddings, write_embeddings
from facedim.template import (
    Embedding,
    EmbeddingSet,
    GaussianTemplate,
    batch_mahalanobis,
    cholesky_spd,
    fit_template,
    mahalanobis,
)
from mock_detector import ScriptedResponse
from oracles import (
    brute_force_eer,
    inverse_mahalanobis,
    naive_covariance,
    random_spd,
)


def ok(number: int, message: str) -> None:
    print(f"[criterion {number}] {message}: PASS")


def run_cli(*argv) -> int:
    with pytest.raises(SystemExit) as info:
        main([str(a) for a in argv])
    return info.value.code if info.value.code is not None else 0


def make_template(rng, d):
    cov = random_spd(rng, d)
    mean = rng.standard_normal(d)
    template = GaussianTemplate(
        identity_id="t",
        mean=mean,
        chol_lower=cholesky_spd(cov),
        epsilon=0.0,
        sample_count=2,
        model_id="m",
    )
    return template, mean, cov


def test_criterion_1_mahalanobis_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    checked = 0
    for d in (2, 8, 64):
        for _ in range(100):
            template, mean, cov = make_template(rng, d)
            for _ in range(10):
                probe = mean + rng.standard_normal(d) * 2.0
                got = mahalanobis(template, Embedding(probe, "m"))
                want = inverse_mahalanobis(mean, cov, probe)
                assert got == pytest.approx(want, rel=1e-9)
                checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget is 5s"
    ok(1, f"Cholesky solve matches explicit inverse on {checked} probes "
          f"(rel 1e-9, {elapsed:.2f}s)")


def test_criterion_2_covariance_oracle_equivalence():
    rng = np.random.default_rng(102)
    for trial in range(5):
        rows = rng.standard_normal((50, 8)) * rng.uniform(0.5, 3.0)
        template = fit_template(EmbeddingSet(rows, "m"), "x", epsilon=0.01)
        mean, cov = naive_covariance(rows, 0.01)
        np.testing.assert_allclose(template.mean, mean, rtol=0, atol=1e-12)
        np.testing.assert_allclose(template.covariance(), cov, rtol=0, atol=1e-12)
    ok(2, "fit on random 50x8 sets matches the naive two-pass double loop "
          "(1e-12 elementwise)")


def test_criterion_3_chi_square_moment():
    rng = np.random.default_rng(103)
    d = 16
    template, mean, cov = make_template(rng, d)
    probes = rng.multivariate_normal(mean, cov, size=10_000)
    mean_sq = float(np.mean(batch_mahalanobis(template, EmbeddingSet(probes, "m")) ** 2))
    assert 0.95 * d <= mean_sq <= 1.05 * d
    ok(3, f"mean squared distance of 10,000 exact Gaussian probes is "
          f"{mean_sq:.3f} (within 5% of {d})")


def _write_synthetic_split(tmp_path, rng, separation, d=64, identities=20,
                           n_train=800, n_test=200):
    """Per-identity Gaussian clusters, unit spread, means `separation` apart
    along orthogonal axes; split 800 train / 200 test as in the M=10, N=100
    few-shot regime."""
    centers = {
        f"id{k:02d}": separation * np.eye(d)[k] for k in range(identities)
    }
    paths = {}
    for split, n in (("train", n_train), ("test", n_test)):
        rows, labels = [], []
        for identity in sorted(centers):
            rows.append(centers[identity] + rng.standard_normal((n, d)))
            labels += [identity] * n
        path = tmp_path / f"{split}.fedm"
        write_embeddings(EmbeddingSet(np.vstack(rows), "m", tuple(labels)), path)
        paths[split] = path
    return paths


def _pipeline_eer(tmp_path, rng, separation, tag):
    paths = _write_synthetic_split(tmp_path, rng, separation)
    gallery_path = tmp_path / f"{tag}.ftpl"
    report_path = tmp_path / f"{tag}.csv"
    assert run_cli("enroll", "--embeddings", paths["train"],
                   "--gallery", gallery_path) == 0
    assert run_cli("evaluate", "--gallery", gallery_path, "--probes", paths["test"],
                   "--report", report_path, "--no-plot") == 0
    summary = json.loads((tmp_path / f"{tag}.summary.json").read_text())
    assert summary["n_genuine"] == 20 * 200
    assert summary["n_impostor"] == 20 * 200 * 19
    return summary["eer"], report_path


def test_criterion_4_synthetic_pipeline_eer(tmp_path):
    start = time.perf_counter()
    rng = np.random.default_rng(104)
    separated_eer, _ = _pipeline_eer(tmp_path, rng, separation=10.0, tag="sep")
    assert separated_eer <= 0.01, f"separated clusters gave EER {separated_eer}"
    overlapping_eer, _ = _pipeline_eer(tmp_path, rng, separation=0.0, tag="overlap")
    assert abs(overlapping_eer - 0.5) <= 0.05, (
        f"identical clusters gave EER {overlapping_eer}"
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s, budget is 60s"
    ok(4, f"20-identity pipeline: EER {separated_eer:.5f} when separated 10x, "
          f"{overlapping_eer:.3f} at zero separation ({elapsed:.1f}s)")


def test_criterion_5_eer_brute_force_equivalence():
    rng = np.random.default_rng(105)
    for _ in range(50):
        n_genuine = rng.integers(1, 21)
        n_impostor = rng.integers(1, 41 - n_genuine)
        genuine = rng.uniform(0.0, 6.0, size=n_genuine).round(1)
        impostor = rng.uniform(0.0, 6.0, size=n_impostor).round(1)
        got = eer(far_frr_curve(ScoreSet(genuine, impostor)))
        want = brute_force_eer(list(genuine), list(impostor))
        assert (got.eer, got.threshold, got.far, got.frr) == want
    ok(5, "eer() equals exhaustive enumeration on 50 random small score sets, exactly")


def test_criterion_6_curve_monotonicity():
    rng = np.random.default_rng(106)
    violations = 0
    curves = 0
    for _ in range(200):
        scale = rng.uniform(0.5, 20.0)
        genuine = rng.uniform(0.0, scale, size=rng.integers(1, 60))
        impostor = rng.uniform(0.0, scale, size=rng.integers(1, 60))
        curve = far_frr_curve(ScoreSet(genuine, impostor))
        curves += 1
        for earlier, later in zip(curve[:-1], curve[1:]):
            if later.far < earlier.far or later.frr > earlier.frr:
                violations += 1
    assert violations == 0
    ok(6, f"zero monotonicity violations across {curves} generated curves")


def test_criterion_7_determinism_and_round_trips(tmp_path, monkeypatch):
    from PIL import Image

    # seeded augmentation manifests are bit-identical
    shots = tmp_path / "shots"
    rng = np.random.default_rng(107)
    for identity in ("a", "b"):
        (shots / identity).mkdir(parents=True)
        for k in range(2):
            arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
            Image.fromarray(arr, "RGB").save(shots / identity / f"s{k}.png", "PNG")
    manifests = []
    for run in ("r1", "r2"):
        out = tmp_path / run
        assert run_cli("augment", "--images-dir", shots, "--out-dir", out,
                       "--n-augment", 5, "--seed", 42) == 0
        manifests.append((out / "manifest.csv").read_bytes())
    assert manifests[0] == manifests[1]

    # FEDM1 round-trips bit-exactly at storage precision
    rows = rng.standard_normal((40, 6)).astype(np.float32).astype(np.float64)
    labeled = EmbeddingSet(rows, "m", tuple(f"id{i % 4}" for i in range(40)))
    fedm = tmp_path / "rt.fedm"
    write_embeddings(labeled, fedm)
    back = read_embeddings(fedm)
    np.testing.assert_array_equal(back.rows, rows)
    assert back.source_labels == labeled.source_labels
    rewritten = tmp_path / "rt2.fedm"
    write_embeddings(back, rewritten)
    assert rewritten.read_bytes() == fedm.read_bytes()

    # FTPL1 round-trips bit-exactly and preserves every distance to 0 ULP
    gallery = Gallery(model_id="m")
    for k in range(4):
        train = rng.standard_normal((30, 6)) + 5.0 * k
        enroll(gallery, f"id{k}", EmbeddingSet(train, "m"), 0.01)
    first = tmp_path / "g1.ftpl"
    save_gallery(gallery, first)
    loaded = load_gallery(first)
    second = tmp_path / "g2.ftpl"
    save_gallery(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    probes = EmbeddingSet(rng.standard_normal((100, 6)) * 3.0, "m")
    for identity in gallery.identities():
        before = batch_mahalanobis(gallery.templates[identity], probes)
        after = batch_mahalanobis(loaded.templates[identity], probes)
        np.testing.assert_array_equal(before, after)

    # parameter streams repeat bit-identically
    config = AugmentConfig(seed=9001)
    assert sample_params(config, 100) == sample_params(config, 100)
    ok(7, "manifests, FEDM1, FTPL1 and parameter streams are bit-reproducible; "
          "reloaded galleries score 100 probes to 0 ULP")


def test_criterion_8_affine_consistency():
    rng = np.random.default_rng(108)
    d = 8
    for _ in range(10):
        rows = rng.standard_normal((50, d))
        probe = rng.standard_normal(d)
        transform = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        assert abs(np.linalg.det(transform)) > 1e-6
        offset = rng.standard_normal(d)
        base = fit_template(EmbeddingSet(rows, "m"), "x", epsilon=0.0)
        moved = fit_template(EmbeddingSet(rows @ transform.T + offset, "m"), "x", epsilon=0.0)
        d0 = mahalanobis(base, Embedding(probe, "m"))
        d1 = mahalanobis(moved, Embedding(transform @ probe + offset, "m"))
        assert d1 == pytest.approx(d0, rel=1e-6)
    ok(8, "distances invariant under invertible affine maps with epsilon = 0 (rel 1e-6)")


def test_criterion_9_detector_client(mock_detector):
    png = b"\x89PNG\r\n\x1a\nstub"
    config = DetectorConfig(endpoint_url=mock_detector.url, timeout_ms=2000,
                            min_confidence=0.5)

    # confidence filtering and ordering
    mock_detector.enqueue_boxes([
        {"x": 0, "y": 0, "width": 4, "height": 4, "confidence": 0.4},
        {"x": 1, "y": 1, "width": 4, "height": 4, "confidence": 0.8},
        {"x": 2, "y": 2, "width": 4, "height": 4, "confidence": 0.6},
    ])
    boxes = detect_faces(png, config)
    assert [b.confidence for b in boxes] == [0.8, 0.6]

    # empty-result fallback keeps the whole image
    image = ImageTensor(np.random.default_rng(109).uniform(0, 1, (8, 8, 3)))
    mock_detector.enqueue_boxes([])
    np.testing.assert_array_equal(
        detect_and_crop(image, png, config).pixels, image.pixels
    )

    # every malformed-response path maps to ProtocolError
    malformed = [
        b"not json",
        b"{}",
        b"[1]",
        json.dumps([{"x": 0, "y": 0, "width": 4}]).encode(),
        json.dumps([{"x": "a", "y": 0, "width": 4, "height": 4, "confidence": 0.9}]).encode(),
        json.dumps([{"x": 0.5, "y": 0, "width": 4, "height": 4, "confidence": 0.9}]).encode(),
        json.dumps([{"x": -1, "y": 0, "width": 4, "height": 4, "confidence": 0.9}]).encode(),
        json.dumps([{"x": 0, "y": 0, "width": 0, "height": 4, "confidence": 0.9}]).encode(),
        json.dumps([{"x": 0, "y": 0, "width": 4, "height": 4, "confidence": 2.0}]).encode(),
    ]
    for body in malformed:
        mock_detector.enqueue(ScriptedResponse(body=body))
        with pytest.raises(ProtocolError):
            detect_faces(png, config)

    # non-2xx statuses map to ServiceError carrying the status
    for status in (404, 500, 503):
        mock_detector.enqueue(ScriptedResponse(status=status, body=b""))
        with pytest.raises(ServiceError) as info:
            detect_faces(png, config)
        assert info.value.status == status

    ok(9, "mock-server coverage: filtering, fallback, malformed and non-2xx paths")
