import itertools

import numpy as np
import pytest

from nsse.graph import (build_class_graph, class_weights, heuristic_beta, knn_edges,
                        laplacian)


def edge_set(E):
    return {(i, j) for i, j in zip(*np.nonzero(np.triu(E, 1)))}


def brute_knn(X, k):
    # independent oracle: explicit loops, ties to the lower index
    N = len(X)
    E = np.zeros((N, N), bool)
    for i in range(N):
        cand = sorted((float(np.sum((X[i] - X[j]) ** 2)), j) for j in range(N) if j != i)
        for _, j in cand[:k]:
            E[i, j] = E[j, i] = True
    return E


def test_two_points():
    assert edge_set(knn_edges(np.array([[0.0], [1.0]]), 1)) == {(0, 1)}


def test_collinear_union():
    X = np.array([[0.0], [1.0], [3.0]])
    assert edge_set(knn_edges(X, 1)) == {(0, 1), (1, 2)}
    assert edge_set(knn_edges(X, 1, mutual=True)) == {(0, 1)}


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = rng.integers(0, 4, size=(12, 2)).astype(float)  # many ties
        for k in (1, 3, 5):
            np.testing.assert_array_equal(knn_edges(X, k), brute_knn(X, k))


def test_duplicates_tie_to_lower_index():
    X = np.array([[0.0], [5.0], [5.0], [5.0]])
    E = knn_edges(X, 1)
    # node 1 picks 2, node 2 picks 1, node 3 picks 1 (lower than 2)
    assert edge_set(E) == {(0, 1), (1, 2), (1, 3)}
    np.testing.assert_array_equal(E, knn_edges(X.copy(), 1))


@pytest.mark.parametrize("k", [0, 4])
def test_k_out_of_range(k):
    with pytest.raises(ValueError):
        knn_edges(np.zeros((4, 1)), k)


def test_relation_is_symmetric_irreflexive():
    E = knn_edges(np.random.default_rng(1).standard_normal((30, 3)), 4)
    assert np.array_equal(E, E.T) and not E.diagonal().any()


def test_heuristic_beta():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert heuristic_beta(X, knn_edges(X, 1)) == 4.0
    Z = np.zeros((3, 2))
    assert heuristic_beta(Z, knn_edges(Z, 1)) == 1.0
    X = np.array([[0.0], [1.0], [1.0 + np.sqrt(2)], [10.0]])
    E = np.zeros((4, 4), bool)
    for i, j in [(0, 1), (1, 2), (0, 2)]:
        E[i, j] = E[j, i] = True
    # squared lengths 1, 2, (1 + sqrt 2)^2
    assert heuristic_beta(X, E) == pytest.approx((1 + 2 + (1 + np.sqrt(2)) ** 2) / 3)
    E = np.zeros((4, 4), bool)
    with pytest.raises(ValueError):
        heuristic_beta(X, E)


def test_heuristic_beta_mean_of_three():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, np.sqrt(2)], [1.0 + np.sqrt(3), np.sqrt(2)]])
    E = np.zeros((4, 4), bool)
    for i, j in [(0, 1), (1, 2), (2, 3)]:
        E[i, j] = E[j, i] = True
    assert heuristic_beta(X, E) == pytest.approx(2.0)


def test_class_weights_examples():
    beta = 2.5
    X = np.array([[0.0], [np.sqrt(beta)]])
    E = knn_edges(X, 1)
    Ww, Wb = class_weights(X, [0, 0], E, beta)
    assert Ww[0, 1] == pytest.approx(np.exp(-1.0)) and Wb[0, 1] == 0
    Ww, Wb = class_weights(X, [0, 1], E, beta)
    assert Ww[0, 1] == 0 and Wb[0, 1] == 1
    Ww, _ = class_weights(X, [0, 0], np.zeros((2, 2), bool), beta)
    assert Ww[0, 1] == 0


def test_between_class_weights_are_dense():
    X = np.random.default_rng(2).standard_normal((9, 2))
    labels = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
    _, Wb = class_weights(X, labels, knn_edges(X, 1), 1.0)
    for i, j in itertools.product(range(9), repeat=2):
        assert Wb[i, j] == float(labels[i] != labels[j])


def test_laplacian_examples():
    np.testing.assert_array_equal(laplacian([[0, 1], [1, 0]]), [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(laplacian(np.zeros((3, 3))), np.zeros((3, 3)))
    W = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    np.testing.assert_array_equal(laplacian(W), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    with pytest.raises(ValueError):
        laplacian([[0, 1], [0, 0]])


def random_graph(seed, N=25, M=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, 3))
    labels = rng.integers(0, M, N)
    return X, labels, build_class_graph(X, labels, k=4)


def test_graph_invariants():
    for seed in range(5):
        X, labels, g = random_graph(seed)
        same = labels[:, None] == labels[None, :]
        assert np.all(g.Ww[~(same & g.edges)] == 0)
        assert np.all(g.Ww[same & g.edges & ~np.eye(len(X), dtype=bool)] > 0)
        assert not g.Ww.diagonal().any() and not g.Wb.diagonal().any()
        for L in (g.Lw, g.Lb):
            np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
            assert np.linalg.eigvalsh(L).min() >= -1e-10


def test_quadratic_form_identity():
    for seed in range(5):
        X, labels, g = random_graph(seed)
        rng = np.random.default_rng(100 + seed)
        for W, L in ((g.Ww, g.Lw), (g.Wb, g.Lb)):
            x = rng.standard_normal(len(X))
            pair_sum = sum(W[i, j] * (x[i] - x[j]) ** 2
                           for i in range(len(X)) for j in range(i + 1, len(X)))
            assert x @ L @ x == pytest.approx(pair_sum, rel=1e-10)


def test_between_class_trace_shortcut():
    X, labels, g = random_graph(7, N=30)
    Y = np.random.default_rng(0).standard_normal((30, 2))
    brute = sum(np.sum((Y[i] - Y[j]) ** 2)
                for i in range(30) for j in range(i + 1, 30) if labels[i] != labels[j])
    assert np.trace(Y.T @ g.Lb @ Y) == pytest.approx(brute, rel=1e-10)
