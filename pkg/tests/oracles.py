"""Independent oracles used by the unit and acceptance suites.

Everything here is deliberately naive (explicit loops, explicit inverses)
and shares no code with the package under test.
"""

import math

import numpy as np


def naive_covariance(rows, epsilon):
    """Two-pass sample covariance by explicit double loop."""
    rows = np.asarray(rows, dtype=np.float64)
    n, d = rows.shape
    mean = [sum(rows[i, j] for i in range(n)) / n for j in range(d)]
    cov = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            acc = 0.0
            for i in range(n):
                acc += (rows[i, a] - mean[a]) * (rows[i, b] - mean[b])
            cov[a, b] = acc / (n - 1)
    for a in range(d):
        cov[a, a] += epsilon
    return np.array(mean), cov


def inverse_mahalanobis(mean, cov, probe):
    """Mahalanobis distance through the explicit covariance inverse."""
    delta = np.asarray(probe, dtype=np.float64) - mean
    return math.sqrt(delta @ np.linalg.inv(cov) @ delta)


def random_spd(rng, d, eig_lo=0.1, eig_hi=10.0):
    """Random SPD matrix with eigenvalues in [eig_lo, eig_hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = rng.uniform(eig_lo, eig_hi, size=d)
    return (q * eigs) @ q.T


def brute_force_curve(genuine, impostor):
    """Candidate thresholds and rates by explicit enumeration."""
    pooled = sorted(set(genuine) | set(impostor))
    thresholds = [pooled[0] - 1.0]
    for a, b in zip(pooled[:-1], pooled[1:]):
        thresholds.append((a + b) / 2.0)
    thresholds.append(pooled[-1] + 1.0)
    points = []
    for t in thresholds:
        far = sum(1 for s in impostor if s <= t) / len(impostor)
        frr = sum(1 for s in genuine if s > t) / len(genuine)
        points.append((t, far, frr))
    return points


def brute_force_eer(genuine, impostor):
    """Linear scan for min |far - frr| with the documented tie-break."""
    best = None
    for t, far, frr in brute_force_curve(genuine, impostor):
        key = (abs(far - frr), (far + frr) / 2.0, t)
        if best is None or key < best[0]:
            best = (key, t, far, frr)
    _, t, far, frr = best
    return (far + frr) / 2.0, t, far, frr
