from itertools import product

import numpy as np
import pytest

from seglex.cluster import assign, kmeans_fit, kmeans_step, nearest_centroids
from seglex.errors import ParameterError, ShapeError


def inertia_oracle_4pt(points, n_clusters):
    """Exhaustive assignment enumeration for tiny instances."""
    best = np.inf
    n = len(points)
    for labels in product(range(n_clusters), repeat=n):
        total = 0.0
        for k in range(n_clusters):
            members = points[[i for i in range(n) if labels[i] == k]]
            if len(members) == 0:
                continue
            mu = members.mean(axis=0)
            total += ((members - mu) ** 2).sum()
        best = min(best, total)
    return best


def test_k_equals_point_count():
    points = np.array([[0.0, 0.0], [0.0, 1.0]])
    model = kmeans_fit(points, 2, seed=0)
    assert model.inertia == 0.0
    assert sorted(map(tuple, model.centroids)) == [(0.0, 0.0), (0.0, 1.0)]


def test_four_point_instance_reaches_enumeration_optimum():
    points = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
    oracle = inertia_oracle_4pt(points, 2)
    assert oracle == 4.0
    # seed chosen so Lloyd's local optimum is the global one
    model = kmeans_fit(points, 2, seed=1)
    assert model.inertia == oracle
    assert sorted(map(tuple, model.centroids)) == [(0.0, 1.0), (10.0, 1.0)]


def test_k1_centroid_is_mean():
    rng = np.random.default_rng(0)
    points = rng.standard_normal((30, 3))
    model = kmeans_fit(points, 1, seed=0)
    assert np.allclose(model.centroids[0], points.mean(axis=0), atol=1e-12)


def test_assign_exact_and_ties():
    centroids = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    model = kmeans_fit(centroids, 4, seed=0)
    # model centroids equal the points; find the one matching centroid 3
    idx, dist = assign(model, np.array([3.0, 0.0]))
    assert dist == 0.0
    assert np.allclose(model.centroids[idx], [3.0, 0.0])

    model2 = kmeans_fit(np.array([[0.0, 0.0], [2.0, 0.0]]), 2, seed=0,
                        init_centroids=np.array([[0.0, 0.0], [2.0, 0.0]]))
    idx, dist = assign(model2, np.array([1.0, 0.0]))
    assert idx == 0  # equidistant resolves to the lowest index
    assert dist == 1.0


def test_assign_matches_linear_scan_oracle():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        K = int(rng.integers(1, 8))
        M = int(rng.integers(1, 6))
        centroids = rng.standard_normal((K, M))
        model = kmeans_fit(centroids, K, seed=0, init_centroids=centroids, max_iters=1)
        point = rng.standard_normal(M)
        idx, dist = nearest_centroids(point, centroids)
        best_k, best_d = 0, np.inf
        for k in range(K):
            d = float(((point - centroids[k]) ** 2).sum())
            if d < best_d:
                best_k, best_d = k, d
        assert idx == best_k
        assert dist == pytest.approx(best_d, rel=1e-12)


def test_assign_shape_error():
    model = kmeans_fit(np.zeros((3, 2)) + np.arange(3)[:, None], 2, seed=0)
    with pytest.raises(ShapeError):
        assign(model, np.zeros(3))


def test_step_fixpoint_unchanged():
    rng = np.random.default_rng(2)
    points = rng.standard_normal((40, 2))
    model = kmeans_fit(points, 3, seed=0, max_iters=200)
    stepped = kmeans_step(model, points)
    assert np.array_equal(stepped.centroids, model.centroids)
    assert np.array_equal(stepped.assignments, model.assignments)
    assert stepped.inertia == model.inertia


def test_step_inertia_non_increasing():
    rng = np.random.default_rng(3)
    for trial in range(100):
        points = rng.standard_normal((int(rng.integers(5, 60)), int(rng.integers(1, 5))))
        K = int(rng.integers(1, min(6, len(points)) + 1))
        model = kmeans_fit(points, K, seed=trial, max_iters=1)
        for _ in range(8):
            nxt = kmeans_step(model, points)
            assert nxt.inertia <= model.inertia * (1 + 1e-9) + 1e-12
            model = nxt


def test_empty_cluster_reseeded_to_farthest():
    # both init centroids sit on the left; the right point must recapture a cluster
    points = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0]])
    init = np.array([[0.0, 0.0], [0.05, 0.0]])
    model = kmeans_fit(points, 2, seed=0, init_centroids=init, max_iters=1)
    stepped = kmeans_step(model, points)
    assert any(np.allclose(c, [10.0, 0.0]) for c in stepped.centroids)
    assert stepped.inertia <= model.inertia * (1 + 1e-9)
    converged = kmeans_fit(points, 2, seed=0, init_centroids=init, max_iters=50)
    assert converged.inertia == pytest.approx(0.005, abs=1e-12)


def test_fit_deterministic():
    rng = np.random.default_rng(4)
    points = rng.standard_normal((50, 4))
    a = kmeans_fit(points, 5, seed=9)
    b = kmeans_fit(points, 5, seed=9)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.inertia == b.inertia


def test_fit_k_exceeds_points():
    points = np.array([[0.0, 0.0], [1.0, 0.0]])
    model = kmeans_fit(points, 4, seed=0)
    assert model.n_clusters == 4
    assert np.isfinite(model.centroids).all()


def test_fit_parameter_errors():
    with pytest.raises(ParameterError):
        kmeans_fit(np.zeros((3, 2)), 0, seed=0)
    with pytest.raises(ParameterError):
        kmeans_fit(np.zeros((0, 2)), 1, seed=0)
    with pytest.raises(ParameterError):
        kmeans_fit(np.zeros((3, 2)), 1, seed=0, max_iters=0)


def test_warm_start_honored():
    rng = np.random.default_rng(5)
    points = rng.standard_normal((30, 2))
    warm = kmeans_fit(points, 3, seed=0, max_iters=200)
    again = kmeans_fit(points, 3, seed=123, max_iters=1, init_centroids=warm.centroids)
    # a converged warm start stays put regardless of the seed
    assert np.array_equal(again.centroids, warm.centroids)


def test_gemm_path_agrees_with_difference_path():
    # K >= 128 switches to the matrix-product expansion; same winners
    from seglex import cluster as cluster_mod

    rng = np.random.default_rng(6)
    centroids = rng.standard_normal((200, 16))
    points = rng.standard_normal((500, 16))
    idx_fast, dist_fast = nearest_centroids(points, centroids)
    step = cluster_mod._GEMM_MIN_CENTROIDS
    try:
        cluster_mod._GEMM_MIN_CENTROIDS = 10**9  # force the difference path
        idx_ref, dist_ref = nearest_centroids(points, centroids)
    finally:
        cluster_mod._GEMM_MIN_CENTROIDS = step
    assert np.array_equal(idx_fast, idx_ref)
    assert np.allclose(dist_fast, dist_ref, rtol=1e-9, atol=1e-9)
    # a point sitting exactly on a centroid keeps a (floored) zero distance
    on_centroid, d0 = nearest_centroids(centroids[17], centroids)
    assert on_centroid == 17
    assert d0 == pytest.approx(0.0, abs=1e-12)


def test_weighted_centroid_update():
    points = np.array([[0.0], [3.0]])
    weights = np.array([1.0, 2.0])
    model = kmeans_fit(points, 1, seed=0, weights=weights)
    assert model.centroids[0, 0] == pytest.approx(2.0)  # (0*1 + 3*2) / 3
