"""Per-identity Gaussian templates over embedding vectors.

Each enrolled identity is represented by a multivariate normal distribution
fitted to a set of embedding vectors: the arithmetic mean ``mu`` and the
unbiased sample covariance (divisor ``count - 1``) regularized by ``epsilon``
on the diagonal so the matrix is always positive definite.  A probe is scored
by its Mahalanobis distance

    dist(x) = sqrt((x - mu)^T Sigma^{-1} (x - mu))

The covariance is never inverted, and never stored whole: templates keep the
lower Cholesky factor ``L`` with ``L L^T = Sigma``, and distances come from
one triangular solve ``L y = x - mu`` followed by ``||y||``.  This halves the
memory, makes every solve O(d^2), and guarantees positive definiteness
round-trips through serialization.

All statistics are computed in 64-bit floating point regardless of how the
embeddings were stored on disk.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DimensionError,
    InsufficientSamplesError,
    InvalidEmbeddingError,
    ModelMismatchError,
    SingularCovarianceError,
)

logger = logging.getLogger(__name__)

#: Default diagonal regularization added to the sample covariance.
DEFAULT_EPSILON = 0.01

#: Above this dimension a full d x d covariance gets expensive; fitting logs a warning.
LARGE_DIMENSION = 1024

#: Relative tolerance for the symmetry check in :func:`cholesky_spd`.
SYMMETRY_RTOL = 1e-10


def _freeze(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Embedding:
    """A d-dimensional vector tagged with the backbone that produced it.

    Args:
        values: 1-D real vector, d >= 1, all values finite.
        model_id: short string naming the producing backbone.
    """

    values: np.ndarray
    model_id: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise InvalidEmbeddingError(
                f"embedding must be a 1-D vector with d >= 1, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidEmbeddingError("embedding contains non-finite values")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EmbeddingSet:
    """A (count x d) matrix of embeddings sharing one backbone.

    Args:
        rows: matrix of shape (count, d), count >= 1, d >= 1, finite.
        model_id: backbone tag shared by every row.
        source_labels: optional per-row identity labels (length == count).
    """

    rows: np.ndarray
    model_id: str
    source_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise InvalidEmbeddingError(
                f"embedding set must be a (count x d) matrix with count, d >= 1, "
                f"got shape {rows.shape}"
            )
        if not np.all(np.isfinite(rows)):
            raise InvalidEmbeddingError("embedding set contains non-finite values")
        object.__setattr__(self, "rows", _freeze(rows))
        if self.source_labels is not None:
            labels = tuple(str(label) for label in self.source_labels)
            if len(labels) != rows.shape[0]:
                raise ValueError(
                    f"{len(labels)} labels for {rows.shape[0]} rows"
                )
            object.__setattr__(self, "source_labels", labels)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def row(self, index: int) -> Embedding:
        """The embedding at ``index`` as a scalar probe."""
        return Embedding(self.rows[index], self.model_id)


@dataclass(frozen=True)
class GaussianTemplate:
    """Fitted identity distribution: mean plus lower Cholesky factor of Sigma.

    ``chol_lower`` is lower triangular with a strictly positive diagonal,
    which is equivalent to Sigma = chol_lower @ chol_lower.T being symmetric
    positive definite.
    """

    identity_id: str
    mean: np.ndarray
    chol_lower: np.ndarray
    epsilon: float
    sample_count: int
    model_id: str

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        chol = np.asarray(self.chol_lower, dtype=np.float64)
        if mean.ndim != 1 or chol.shape != (mean.size, mean.size):
            raise DimensionError(
                f"mean of length {mean.shape} does not match Cholesky factor "
                f"of shape {chol.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(chol))):
            raise InvalidEmbeddingError("template parameters contain non-finite values")
        if np.any(np.triu(chol, k=1) != 0.0):
            raise ValueError("chol_lower must be lower triangular")
        if np.any(np.diagonal(chol) <= 0.0):
            raise SingularCovarianceError(
                "chol_lower needs a strictly positive diagonal"
            )
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "chol_lower", _freeze(chol))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def covariance(self) -> np.ndarray:
        """Reconstruct the full covariance matrix (fresh array, for inspection)."""
        return self.chol_lower @ self.chol_lower.T


def cholesky_spd(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    The input must be symmetric to within ``SYMMETRY_RTOL`` relative to its
    largest entry; it is explicitly symmetrized before factorization so both
    triangles contribute.

    Raises:
        ValueError: non-square or asymmetric input.
        SingularCovarianceError: the matrix is not positive definite.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if float(np.max(np.abs(a - a.T))) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric")
    try:
        return np.linalg.cholesky((a + a.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            "matrix is not positive definite; regularize with epsilon > 0"
        ) from exc


def fit_template(
    samples: EmbeddingSet,
    identity_id: str,
    epsilon: float = DEFAULT_EPSILON,
) -> GaussianTemplate:
    """Fit a Gaussian template to a set of embeddings.

    The mean is the arithmetic average of the rows; the covariance is the
    unbiased two-pass sample covariance (divisor ``count - 1``) plus
    ``epsilon * I`` added after normalization.  Column sums use exactly
    rounded summation, so the fitted mean is bit-identical under any
    permutation of the sample rows.

    Args:
        samples: at least two embedding rows.
        identity_id: name stored on the resulting template.
        epsilon: nonnegative diagonal regularization; must be positive
            whenever ``count - 1 < d`` or the data is rank deficient,
            otherwise the covariance cannot be positive definite.

    Raises:
        InsufficientSamplesError: fewer than two samples.
        SingularCovarianceError: ``epsilon == 0`` and the sample covariance
            is rank deficient.
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    rows = samples.rows
    n, d = rows.shape
    if n < 2:
        raise InsufficientSamplesError(
            f"need at least 2 samples to estimate a covariance, got {n}"
        )
    if d > LARGE_DIMENSION:
        logger.warning(
            "fitting a %d-dimensional template: the full covariance takes ~%.0f MB",
            d,
            d * d * 8 / 1e6,
        )
    mean = np.array([math.fsum(rows[:, j]) for j in range(d)]) / n
    deviations = rows - mean
    cov = (deviations.T @ deviations) / (n - 1)
    cov[np.diag_indices(d)] += epsilon
    chol = cholesky_spd(cov)
    return GaussianTemplate(
        identity_id=identity_id,
        mean=mean,
        chol_lower=chol,
        epsilon=epsilon,
        sample_count=n,
        model_id=samples.model_id,
    )


def _check_probe(template: GaussianTemplate, dim: int, model_id: str) -> None:
    if dim != template.dim:
        raise DimensionError(
            f"probe dimension {dim} does not match template dimension {template.dim}"
        )
    if model_id != template.model_id:
        raise ModelMismatchError(
            f"probe from model {model_id!r} scored against template "
            f"from model {template.model_id!r}"
        )


def _distance(template: GaussianTemplate, values: np.ndarray) -> float:
    # Solve L y = (x - mu); ||y|| is the Mahalanobis distance.  Shared by the
    # scalar and batch entry points so their results are bitwise identical.
    y = solve_triangular(
        template.chol_lower, values - template.mean, lower=True, check_finite=False
    )
    return float(np.linalg.norm(y))


def mahalanobis(template: GaussianTemplate, probe: Embedding) -> float:
    """Mahalanobis distance of a probe from the template distribution.

    Computed by a single lower-triangular solve against the stored Cholesky
    factor; the covariance inverse is never formed.

    Raises:
        DimensionError: probe dimension differs from the template's.
        ModelMismatchError: probe was produced by a different backbone.
    """
    _check_probe(template, probe.dim, probe.model_id)
    return _distance(template, probe.values)


def batch_mahalanobis(template: GaussianTemplate, probes: EmbeddingSet) -> np.ndarray:
    """Mahalanobis distance of every row of ``probes``.

    Element ``i`` equals ``mahalanobis(template, probes.row(i))`` exactly:
    both entry points run the identical solve.
    """
    _check_probe(template, probes.dim, probes.model_id)
    out = np.empty(probes.count, dtype=np.float64)
    for i in range(probes.count):
        out[i] = _distance(template, probes.rows[i])
    return out
