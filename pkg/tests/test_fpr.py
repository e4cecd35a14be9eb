import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from diglacian import oracle
from diglacian.errors import DegenerateAux, ZeroMean
from diglacian.fpr import (
    auxiliary_vector,
    build_combinatorial,
    cosine_knn,
    knn_combine,
    l2_normalize_rows,
    mean_direction,
    neighbor_recall,
    similarity_sort,
    sorting_graph,
    split_signs,
)
from diglacian.graph import DiGraph, is_aperiodic, is_strongly_connected


def edges(A):
    coo = sp.triu(A, k=1).tocoo()
    return sorted(zip(coo.row.tolist(), coo.col.tolist()))


def test_l2_normalize_rows():
    Xhat, zero = l2_normalize_rows([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(Xhat[0], [0.6, 0.8])
    assert np.array_equal(Xhat[1], [0, 0]) and zero.tolist() == [False, True, False, False]
    assert np.array_equal(Xhat[2:], np.eye(2))


def test_mean_direction():
    assert np.allclose(mean_direction([[1.0, 0.0], [0.0, 1.0]]), [np.sqrt(0.5)] * 2)
    row = np.array([0.6, 0.8])
    assert np.allclose(mean_direction([row, row, row]), row)
    with pytest.raises(ZeroMean):
        mean_direction([[1.0, 0.0], [-1.0, 0.0]])


def test_auxiliary_vector_gram_schmidt():
    assert np.allclose(auxiliary_vector(np.array([1.0, 0.0]), 0, initial=[1.0, 1.0]), [0, 1])


def test_auxiliary_vector_redraws_parallel_initial():
    xbar = np.array([0.6, 0.8, 0.0])
    a = auxiliary_vector(xbar, 5, initial=2 * xbar)
    assert abs(a @ xbar) < 1e-10 and np.isclose(np.linalg.norm(a), 1)


def test_auxiliary_vector_degenerate_dimension():
    with pytest.raises(DegenerateAux):
        auxiliary_vector(np.array([1.0]), 0)


@given(st.integers(0, 2**31 - 1), st.integers(2, 40))
def test_auxiliary_vector_orthogonal(seed, d):
    xbar = np.random.default_rng(seed).random(d) + 0.01
    xbar /= np.linalg.norm(xbar)
    assert abs(auxiliary_vector(xbar, seed) @ xbar) < 1e-10


def test_similarity_sort_hand_angles():
    ang = np.radians([10.0, 50.0, 80.0])
    X = np.c_[np.cos(ang), np.sin(ang)]
    assert similarity_sort(X, np.array([1.0, 0.0])).order.tolist() == [0, 1, 2]
    assert similarity_sort(X[::-1], np.array([1.0, 0.0])).order.tolist() == [2, 1, 0]


def test_similarity_sort_ties_identity():
    X = np.tile([0.6, 0.8], (5, 1))
    assert similarity_sort(X, np.array([0.8, -0.6])).order.tolist() == list(range(5))


@given(st.integers(0, 10_000), st.integers(3, 64))
def test_two_dimensional_sort_is_angular(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 2)) + 1e-3
    Xhat, _ = l2_normalize_rows(X)
    a = auxiliary_vector(mean_direction(Xhat), seed)
    order = similarity_sort(Xhat, a).order
    theta = np.arctan2(Xhat[order, 1], Xhat[order, 0])
    steps = np.diff(theta)
    assert np.all(steps >= -1e-12) or np.all(steps <= 1e-12)
    # the exact cosine nearest neighbor is always adjacent in the order
    S = sorting_graph(order, 1)
    assert neighbor_recall(S, oracle.exact_knn(Xhat, 1)) == 1.0


def test_sorting_graph_windows():
    assert edges(sorting_graph(np.arange(4), 1)) == [(0, 1), (1, 2), (2, 3)]
    assert edges(sorting_graph(np.arange(4), 2)) == [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]
    assert edges(sorting_graph(np.arange(2), 3)) == [(0, 1)]
    S = sorting_graph(np.array([2, 0, 3, 1]), 1)
    assert (S != S.T).nnz == 0
    assert edges(S) == [(0, 2), (0, 3), (1, 3)]


def test_split_signs():
    pos, neg = split_signs([[1.0, -2.0]])
    assert pos.tolist() == [[1, 0]] and neg.tolist() == [[0, -2]]
    X = np.abs(np.random.default_rng(0).standard_normal((4, 3)))
    pos, neg = split_signs(X)
    assert np.array_equal(pos, X) and not neg.any()
    Y = np.random.default_rng(1).standard_normal((6, 4))
    pos, neg = split_signs(Y)
    assert np.array_equal(pos + neg, Y)


def test_two_node_combinatorial():
    g = DiGraph.from_edges(2, [], [], np.array([[1.0, 0.2], [0.3, 1.0]]))
    comb = build_combinatorial(g, 2, 0)
    assert np.array_equal(comb.adjacency.toarray(), [[0, 1], [1, 0]])
    assert np.array_equal(comb.transition.toarray(), [[0.5, 0.5], [0.5, 0.5]])


def test_odd_k_rejected():
    g = DiGraph.from_edges(3, [0], [1], np.eye(3))
    for k in (0, 1, 3):
        with pytest.raises(ValueError):
            build_combinatorial(g, k)


def random_graph(seed, n=None, negative=True):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 80))
    A = rng.random((n, n)) < rng.uniform(0, 0.1)
    src, dst = np.nonzero(A)
    X = rng.standard_normal((n, 6)) if negative else rng.random((n, 6))
    return DiGraph.from_edges(n, src, dst, X)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_combinatorial_properties(k):
    for seed in range(100):
        g = random_graph(seed, negative=seed % 2 == 0)
        comb = build_combinatorial(g, k, seed)
        A, S = comb.adjacency, comb.sorting_adjacency
        assert (g.adjacency > A).nnz == 0 and (S > A).nnz == 0
        assert is_strongly_connected(comb.adjacency_loops) and is_aperiodic(comb.adjacency_loops)
        rows = np.asarray(comb.transition.sum(axis=1)).ravel()
        assert np.abs(rows - 1).max() < 1e-12
        assert comb.adjacency_loops.nnz <= g.num_edges + 2 * g.n * k + g.n
        assert comb.transition.nnz <= g.num_edges + 2 * g.n * k + g.n


def test_negative_features_build_two_sorting_graphs():
    g = random_graph(3, n=40)
    pos_only = build_combinatorial(g, 2, 0, features=np.where(g.features > 0, g.features, 0))
    both = build_combinatorial(g, 2, 0)
    assert (pos_only.sorting_adjacency > both.sorting_adjacency).nnz == 0
    assert both.sorting_adjacency.nnz > pos_only.sorting_adjacency.nnz


def test_determinism():
    g = random_graph(11, n=50)
    a, b = build_combinatorial(g, 4, 7), build_combinatorial(g, 4, 7)
    assert (a.transition != b.transition).nnz == 0


def test_knn_combine_complete():
    g = DiGraph.from_edges(5, [0], [1], np.random.default_rng(0).random((5, 3)))
    comb = knn_combine(g, 4)
    assert np.array_equal(comb.adjacency.toarray(), 1 - np.eye(5))


def test_knn_identical_features_ties():
    X = np.ones((6, 3))
    assert cosine_knn(X, 2).tolist() == [[1, 2], [0, 2], [0, 1], [0, 1], [0, 1], [0, 1]]
    assert oracle.exact_knn(l2_normalize_rows(X)[0], 2) == [[1, 2], [0, 2], [0, 1], [0, 1], [0, 1], [0, 1]]
    comb = knn_combine(DiGraph.from_edges(6, [], [], X), 2)
    assert is_strongly_connected(comb.adjacency_loops)


def test_cosine_knn_matches_oracle():
    X = np.random.default_rng(4).random((30, 5))
    assert cosine_knn(X, 3).tolist() == oracle.exact_knn(l2_normalize_rows(X)[0], 3)


def test_sorting_recall_is_fraction():
    g = random_graph(5, n=60, negative=False)
    comb = build_combinatorial(g, 4, 0)
    r = neighbor_recall(comb.sorting_adjacency, oracle.exact_knn(l2_normalize_rows(g.features)[0], 4))
    assert 0.0 <= r <= 1.0
