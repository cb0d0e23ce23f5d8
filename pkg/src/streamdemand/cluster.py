"""Listening-mode discovery: k-means over demand curves under warping.

Demand curves for different songs peak and decay on their own clocks, so
distances use dynamic time warping and centroids are barycenters under
the same alignment. Curves of unequal length are fine; each centroid
lives on the median input length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_MAX_DBA_ITER = 30
_MAX_KMEANS_ITER = 50


@dataclass
class CurveCluster:
    """One listening mode: a centroid series and its member curves."""

    centroid: np.ndarray
    members: list[int] = field(default_factory=list)
    inertia: float = 0.0


def dtw_distance(a, b) -> float:
    """Dynamic-time-warping distance with the symmetric step pattern.

    Root of the summed squared pointwise costs along the optimal
    monotone alignment; no window constraint.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("cannot warp an empty series")
    return float(np.sqrt(_dtw_accumulated(a, b)[-1, -1]))


def _dtw_accumulated(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    cost = (a[:, None] - b[None, :]) ** 2
    D = np.full((n, m), np.inf)
    D[0, 0] = cost[0, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + cost[0, j]
    for i in range(1, n):
        D[i, 0] = D[i - 1, 0] + cost[i, 0]
        row_prev = D[i - 1]
        row = D[i]
        for j in range(1, m):
            row[j] = cost[i, j] + min(row_prev[j], row[j - 1], row_prev[j - 1])
    return D


def _dtw_path(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    D = _dtw_accumulated(a, b)
    i, j = a.shape[0] - 1, b.shape[0] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            options = (D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
            k = int(np.argmin(options))  # diagonal preferred on ties
            if k == 0:
                i, j = i - 1, j - 1
            elif k == 1:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def _resample(series: np.ndarray, length: int) -> np.ndarray:
    if series.shape[0] == length:
        return series.copy()
    old = np.linspace(0.0, 1.0, series.shape[0])
    new = np.linspace(0.0, 1.0, length)
    return np.interp(new, old, series)


def dba_barycenter(curves, iterations: int = _MAX_DBA_ITER) -> np.ndarray:
    """Barycenter under warping by fixed-point averaging.

    Starts from the medoid (resampled to the median input length), then
    repeatedly aligns every curve to the current barycenter and averages
    the values mapped onto each barycenter index. The within-set inertia
    is non-increasing across iterations; iteration stops when the
    barycenter is stable.
    """
    series = [np.asarray(c, dtype=float).ravel() for c in curves]
    if not series:
        raise DomainError("need at least one curve")
    if len(series) == 1:
        return series[0].copy()
    target_len = int(np.sort([s.shape[0] for s in series])[(len(series) - 1) // 2])

    # medoid init: minimal summed distance, ties to the lowest index
    dists = np.zeros((len(series), len(series)))
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            dists[i, j] = dists[j, i] = dtw_distance(series[i], series[j])
    center = _resample(series[int(np.argmin(dists.sum(axis=1)))], target_len)

    for _ in range(iterations):
        sums = np.zeros(target_len)
        counts = np.zeros(target_len)
        for s in series:
            for ci, si in _dtw_path(center, s):
                sums[ci] += s[si]
                counts[ci] += 1
        updated = sums / np.maximum(counts, 1.0)
        if np.allclose(updated, center, atol=1e-10):
            return updated
        center = updated
    return center


def inertia_of(curves, centroid) -> float:
    return float(sum(dtw_distance(c, centroid) ** 2 for c in curves))


def z_normalize(series: np.ndarray) -> np.ndarray:
    """Center and scale one series; constant series map to zeros."""
    sd = series.std()
    if sd == 0:
        return np.zeros_like(series)
    return (series - series.mean()) / sd


def kmeans_curves(curves, k: int, seed: int = 0, n_init: int = 4,
                  normalize: bool = False) -> list[CurveCluster]:
    """k-means over curves with warped distances and barycenter centroids.

    Seeding follows the k-means++ rule on squared warped distances;
    iteration stops when assignments stabilize. The procedure restarts
    ``n_init`` times from the seeded stream and keeps the lowest total
    inertia, so one unlucky seeding cannot merge well-separated modes.
    Deterministic for a fixed seed.

    ``normalize`` z-scores each curve first, clustering on shape alone;
    it is off by default because demand magnitude separates listening
    modes too.
    """
    series = [np.asarray(c, dtype=float).ravel() for c in curves]
    if normalize:
        series = [z_normalize(s) for s in series]
    n = len(series)
    if k < 1 or k > n:
        raise DomainError(f"k must lie in 1..{n}, got {k}")
    best: list[CurveCluster] | None = None
    for attempt_rng in np.random.default_rng(seed).spawn(max(n_init, 1)):
        clusters = _kmeans_once(series, k, attempt_rng)
        if best is None or sum(c.inertia for c in clusters) \
                < sum(c.inertia for c in best) - 1e-12:
            best = clusters
    return best


def _kmeans_once(series, k: int, rng) -> list[CurveCluster]:
    n = len(series)
    centroids = [series[int(rng.integers(n))].copy()]
    while len(centroids) < k:
        d2 = np.array([min(dtw_distance(s, c) ** 2 for c in centroids)
                       for s in series])
        total = d2.sum()
        if total <= 0:
            # all remaining curves coincide with a centroid; spread arbitrarily
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centroids.append(series[pick].copy())

    assign = np.full(n, -1)
    for _ in range(_MAX_KMEANS_ITER):
        d = np.array([[dtw_distance(s, c) for c in centroids] for s in series])
        new_assign = d.argmin(axis=1)
        for c in range(k):  # re-seed any emptied cluster
            if not np.any(new_assign == c):
                pick = int(np.argmax(d.min(axis=1)))
                new_assign[pick] = c
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centroids = [dba_barycenter([series[i] for i in np.nonzero(assign == c)[0]])
                     for c in range(k)]

    clusters = []
    for c in range(k):
        members = [i for i in range(n) if assign[i] == c]
        clusters.append(CurveCluster(
            centroid=centroids[c],
            members=members,
            inertia=inertia_of([series[i] for i in members], centroids[c])))
    return clusters


def cluster_purity(clusters: list[CurveCluster], labels) -> float:
    """Fraction of curves whose cluster's majority label matches their own."""
    labels = np.asarray(labels)
    hit = 0
    for cl in clusters:
        if not cl.members:
            continue
        member_labels = labels[cl.members]
        values, counts = np.unique(member_labels, return_counts=True)
        hit += counts.max()
    return hit / labels.shape[0]
