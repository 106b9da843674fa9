"""Lloyd's K-means over segment embeddings.

The model is the lexicon: K centroids plus the assignment of every fitted
embedding. Distances are squared Euclidean; assignment ties break toward
the lowest cluster index; empty clusters are re-seeded to the point
currently farthest from its centroid so K stays constant.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray  # (K, M)
    assignments: np.ndarray  # (N,) cluster index per fitted point
    inertia: float  # sum of squared distances of fitted points to their centroids

    @property
    def n_clusters(self):
        return self.centroids.shape[0]


# Models below this size use exact per-pair differences (bit-clean zeros
# and ties); larger ones switch to the GEMM expansion for throughput.
_GEMM_MIN_CENTROIDS = 128


def nearest_centroids(points, centroids):
    """(index, squared distance) of the closest centroid for each point.

    argmin takes the first (lowest-index) minimum, which fixes
    tie-breaking on both compute paths. The large-K path expands
    ||x-c||^2 = ||x||^2 + ||c||^2 - 2<x,c> through a matrix product and
    floors rounding spill at zero.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    K, M = centroids.shape
    if pts.shape[1] != M:
        raise ShapeError(f"points have dimension {pts.shape[1]}, centroids {M}")
    n = pts.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    if K < _GEMM_MIN_CENTROIDS:
        step = max(1, int(8_000_000 // max(K * M, 1)))
        for s in range(0, n, step):
            block = pts[s : s + step]
            d = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            best = np.argmin(d, axis=1)
            idx[s : s + step] = best
            dist[s : s + step] = d[np.arange(block.shape[0]), best]
    else:
        c_sq = np.einsum("ij,ij->i", centroids, centroids)
        step = max(1, int(32_000_000 // max(K, 1)))
        for s in range(0, n, step):
            block = pts[s : s + step]
            d = block @ centroids.T
            d *= -2.0
            d += c_sq[None, :]
            d += np.einsum("ij,ij->i", block, block)[:, None]
            np.maximum(d, 0.0, out=d)
            best = np.argmin(d, axis=1)
            idx[s : s + step] = best
            dist[s : s + step] = d[np.arange(block.shape[0]), best]
    if single:
        return int(idx[0]), float(dist[0])
    return idx, dist


def assign(model, point):
    """Nearest-centroid query for one embedding vector."""
    return nearest_centroids(point, model.centroids)


def _update_centroids(points, idx, dist, centroids, weights=None):
    """Means of the assigned points; empty clusters are re-seeded to the
    farthest-from-centroid points (farthest first, deterministic)."""
    K = centroids.shape[0]
    new = np.zeros_like(centroids)
    if weights is None:
        np.add.at(new, idx, points)
        mass = np.bincount(idx, minlength=K).astype(np.float64)
    else:
        np.add.at(new, idx, points * weights[:, None])
        mass = np.bincount(idx, weights=weights, minlength=K)
    filled = mass > 0
    new[filled] /= mass[filled, None]
    empties = np.flatnonzero(~filled)
    if empties.size:
        order = np.argsort(-dist, kind="stable")
        for k, src in zip(empties, order[: empties.size]):
            new[k] = points[src]
    return new


def kmeans_fit(points, n_clusters, seed=0, max_iters=100, init_centroids=None, weights=None):
    """Lloyd iterations until the assignment stops changing or max_iters.

    Initial centroids are a seeded uniform choice of distinct points
    (duplicated points are allowed when n_clusters exceeds the pool);
    init_centroids gives a warm start instead. `weights` switches the
    centroid update to a weighted mean; inertia stays unweighted.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ParameterError("points must be a non-empty (N, M) array")
    if n_clusters < 1:
        raise ParameterError("n_clusters must be >= 1")
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (X.shape[0],):
            raise ShapeError("weights must align with points")
    N = X.shape[0]
    if init_centroids is not None:
        centroids = np.array(init_centroids, dtype=np.float64)
        if centroids.shape != (n_clusters, X.shape[1]):
            raise ShapeError(
                f"init_centroids must be ({n_clusters}, {X.shape[1]}), got {centroids.shape}"
            )
    else:
        rng = np.random.default_rng(seed)
        if n_clusters <= N:
            chosen = rng.choice(N, size=n_clusters, replace=False)
        else:
            chosen = np.concatenate(
                [np.arange(N), rng.choice(N, size=n_clusters - N, replace=True)]
            )
        centroids = X[chosen].copy()

    prev_idx = None
    for _ in range(max_iters):
        idx, dist = nearest_centroids(X, centroids)
        if prev_idx is not None and np.array_equal(idx, prev_idx):
            break
        centroids = _update_centroids(X, idx, dist, centroids, weights)
        prev_idx = idx
    idx, dist = nearest_centroids(X, centroids)
    return ClusterModel(centroids=centroids, assignments=idx, inertia=float(dist.sum()))


def kmeans_step(model, points, weights=None):
    """One assign-then-update Lloyd pass; inertia never increases."""
    X = np.asarray(points, dtype=np.float64)
    idx, dist = nearest_centroids(X, model.centroids)
    centroids = _update_centroids(X, idx, dist, model.centroids, weights)
    idx2, dist2 = nearest_centroids(X, centroids)
    return ClusterModel(centroids=centroids, assignments=idx2, inertia=float(dist2.sum()))


def save_centroids(model, path):
    """Dump centroids in the feature-file binary format for reuse across runs."""
    from .corpusio import FeatureMatrix, write_feature_file

    write_feature_file(FeatureMatrix("centroids", model.centroids.astype(np.float32), 1.0), path)


def load_centroids(path):
    from .corpusio import read_feature_file

    return read_feature_file(path).data.astype(np.float64)
