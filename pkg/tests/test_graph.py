import numpy as np
import pytest

from kmp.exceptions import ArgumentError, DimensionError
from kmp.graph import (ClusterAssignment, build_l1_graph, degree_and_laplacian,
                       fit_gmm, l1_weights, normalize_columns, omp)


def _check_graph(g, labels=None):
    W, D, L = g.W, g.D, g.L
    np.testing.assert_array_equal(W, W.T)
    np.testing.assert_array_equal(np.diag(W), 0.0)
    assert np.all(W >= 0)
    np.testing.assert_allclose(np.diag(D), W.sum(axis=1))
    assert np.max(np.abs(L @ np.ones(len(W)))) <= 1e-10
    w = np.linalg.eigvalsh(L)
    assert w[0] >= -1e-8 * max(w[-1], 1.0)
    if labels is not None:
        cross = labels[:, None] != labels[None, :]
        assert np.all(W[cross] == 0.0)


# ---------------------------------------------------------------- GMM

def test_gmm_single_component(rng):
    X = rng.normal(size=(30, 3))
    c = fit_gmm(X, 1, seed=0)
    assert np.all(c.labels == 0)
    np.testing.assert_allclose(c.means[0], X.mean(axis=0), atol=1e-12)
    assert c.weights.sum() == pytest.approx(1.0)


def test_gmm_two_blobs(rng):
    X = np.concatenate([rng.normal(0, 0.1, 20), rng.normal(100, 0.1, 20)])[:, None]
    truth = np.repeat([0, 1], 20)
    for seed in range(5):
        labels = fit_gmm(X, 2, seed=seed).labels
        assert np.all(labels == truth) or np.all(labels == 1 - truth)


def test_gmm_one_cluster_per_point(rng):
    X = rng.normal(size=(12, 2))
    c = fit_gmm(X, 12, seed=3)
    assert len(set(c.labels.tolist())) == 12
    assert c.weights.sum() == pytest.approx(1.0)


def test_gmm_deterministic(rng):
    X = rng.normal(size=(40, 4))
    a, b = fit_gmm(X, 4, seed=11), fit_gmm(X, 4, seed=11)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.means, b.means)


def test_gmm_rejects_too_many_clusters():
    with pytest.raises(ArgumentError):
        fit_gmm(np.zeros((3, 1)), 4)


def test_gmm_all_labels_nonempty(rng):
    X = np.repeat(rng.normal(size=(3, 2)), 5, axis=0)  # heavy duplication
    c = fit_gmm(X, 6, seed=0)
    assert set(c.labels.tolist()) == set(range(6))


# ---------------------------------------------------------------- OMP

def test_omp_exact_single_atom(rng):
    B = rng.normal(size=(8, 12))
    code = omp(B[:, 5], B, max_atoms=1)
    assert code.support.tolist() == [5]
    assert code.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    assert code.residual_norm <= 1e-12


def test_omp_zero_target(rng):
    code = omp(np.zeros(6), rng.normal(size=(6, 4)), max_atoms=3)
    assert code.support.size == 0
    assert code.residual_norm == 0.0


def test_omp_zero_column_rejected():
    B = np.eye(3)
    B[:, 1] = 0.0
    with pytest.raises(ArgumentError, match="column 1"):
        omp(np.ones(3), B, 2)
    with pytest.raises(ArgumentError):
        normalize_columns(B)


def test_omp_tie_goes_to_lowest_index():
    B = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    # target (1, 1): column 2 normalised correlates sqrt(2), columns 0,1 correlate 1
    code = omp(np.array([1.0, 0.0]), np.array([[1.0, 1.0], [0.0, 0.0]]), 1)
    assert code.support.tolist() == [0]
    code = omp(np.array([1.0, 1.0]), B[:, :2], 1)
    assert code.support.tolist() == [0]


def test_omp_residual_consistent_and_monotone(rng):
    B = rng.normal(size=(20, 40))
    y = rng.normal(size=20)
    code = omp(y, B, max_atoms=10, residual_tol=0.0)
    assert len(set(code.support.tolist())) == code.support.size <= 10
    recomputed = np.linalg.norm(y - B @ code.dense(40))
    assert abs(recomputed - code.residual_norm) <= 1e-10
    hist = np.array(code.residual_history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_omp_unscales_coefficients(rng):
    B = rng.normal(size=(10, 6)) * np.array([1, 10, 0.1, 3, 5, 2])
    beta = np.zeros(6)
    beta[[1, 4]] = [0.5, -2.0]
    code = omp(B @ beta, B, max_atoms=2)
    np.testing.assert_allclose(code.dense(6), beta, atol=1e-10)


def test_omp_recovers_sparse_codes():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        B, _ = normalize_columns(rng.normal(size=(32, 64)))
        support = rng.choice(64, size=3, replace=False)
        beta = np.zeros(64)
        beta[support] = rng.choice([-1, 1], 3) * rng.uniform(0.5, 2.0, 3)
        code = omp(B @ beta, B, max_atoms=3, residual_tol=0.0)
        if set(code.support.tolist()) == set(support.tolist()):
            hits += 1
            assert np.max(np.abs(code.dense(64) - beta)) <= 1e-8
    assert hits >= 95


# ---------------------------------------------------------------- graphs

def test_degree_and_laplacian_small():
    D, L = degree_and_laplacian(np.zeros((3, 3)))
    assert not D.any() and not L.any()
    D, L = degree_and_laplacian(np.array([[0.0, 3.0], [3.0, 0.0]]))
    np.testing.assert_array_equal(D, np.diag([3.0, 3.0]))
    np.testing.assert_array_equal(L, [[3.0, -3.0], [-3.0, 3.0]])


def test_path_laplacian_spectrum():
    W = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    _, L = degree_and_laplacian(W)
    # det(L - t I) = -t (t - 1) (t - 3)
    np.testing.assert_allclose(np.linalg.eigvalsh(L), [0.0, 1.0, 3.0], atol=1e-12)


def test_degree_rejects_asymmetric():
    with pytest.raises(ArgumentError):
        degree_and_laplacian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        degree_and_laplacian(np.zeros((2, 3)))


def test_l1_graph_collinear_hand_solution():
    # three collinear points at height 1: (0,1), (1,1), (2,1), one cluster
    X = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    raw = l1_weights(X, np.zeros(3, dtype=int), max_atoms=2)
    # middle point: atom (2,1) first, then (0,1) beats e2 on index; 0.5 each
    np.testing.assert_allclose(raw[1], [0.5, 0.0, 0.5], atol=1e-12)
    # first point is exactly the identity atom e2 -> no data weights
    np.testing.assert_array_equal(raw[0], 0.0)
    # last point: (1,1) then (0,1); (2,1) = 2(1,1) - (0,1)
    np.testing.assert_allclose(raw[2], [1.0, 2.0, 0.0], atol=1e-12)
    g = build_l1_graph(X, np.zeros(3, dtype=int), max_atoms=2)
    np.testing.assert_allclose(g.W, [[0, 0.25, 0.5], [0.25, 0, 1.25], [0.5, 1.25, 0]],
                               atol=1e-12)
    _check_graph(g)


def test_l1_graph_singleton_row_is_zero(rng):
    X = rng.normal(size=(6, 3))
    labels = np.array([0, 0, 0, 1, 1, 2])
    raw = l1_weights(X, labels, max_atoms=2)
    np.testing.assert_array_equal(raw[5], 0.0)
    g = build_l1_graph(X, labels, max_atoms=2)
    np.testing.assert_array_equal(g.W[5], 0.0)
    assert g.D[5, 5] == 0.0
    _check_graph(g, labels)


def test_l1_graph_invariants_random(rng):
    for _ in range(10):
        n = int(rng.integers(5, 40))
        X = rng.normal(size=(n, int(rng.integers(2, 6))))
        clusters = fit_gmm(X, int(rng.integers(1, 4)), seed=int(rng.integers(1000)))
        assert isinstance(clusters, ClusterAssignment)
        g = build_l1_graph(X, clusters, max_atoms=int(rng.integers(1, 6)))
        _check_graph(g, clusters.labels)


def test_l1_graph_label_shape_checked(rng):
    with pytest.raises(DimensionError):
        l1_weights(rng.normal(size=(4, 2)), np.zeros(3, dtype=int), 2)
