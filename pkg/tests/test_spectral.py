import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp
from hypothesis import given, strategies as st

from diglacian import oracle
from diglacian.errors import NotRegular
from diglacian.graph import add_self_loops, row_normalize
from diglacian.markov import stationary_distribution
from diglacian.spectral import (
    augmented_propagation,
    diameter_bound_check,
    diglacian,
    normalized_diglacian,
    rayleigh_closed_form,
    rayleigh_quotient,
    regularize_out_degree,
    spectrum_bounds,
    undirected_propagation,
)
from diglacian.verify import random_chain, regular_chain


def test_two_state_operators(two_state):
    assert np.allclose(diglacian(two_state).toarray(), [[0, -0.25], [-0.25, 0]], atol=1e-15)
    assert np.allclose(normalized_diglacian(two_state).toarray(), [[0, -0.5], [-0.5, 0]], atol=1e-15)
    # D~^{-1} + P for the symmetric two-node chain
    assert np.allclose(augmented_propagation(two_state).toarray(), [[1, 0.5], [0.5, 1]], atol=1e-15)


def dense_formulas(chain):
    """Direct evaluation of the three operators from their matrix definitions."""
    P = chain.transition.toarray()
    Pi = np.diag(chain.pi)
    Dinv = np.diag(1 / chain.degrees)
    h, hi = np.diag(np.sqrt(chain.pi)), np.diag(1 / np.sqrt(chain.pi))
    T_tilde = Pi @ (Dinv - P)
    T = Dinv - 0.5 * (h @ P @ hi + hi @ P.T @ h)
    T_hat = 0.5 * (h @ (Dinv + P) @ hi + hi @ (Dinv + P.T) @ h)
    return T_tilde, T, T_hat


@pytest.mark.parametrize("seed", range(5))
def test_operators_match_dense_definitions(seed):
    _, chain = random_chain(30 + 10 * seed, seed)
    T_tilde, T, T_hat = dense_formulas(chain)
    assert np.abs(diglacian(chain).toarray() - T_tilde).max() < 1e-14
    assert np.abs(normalized_diglacian(chain).toarray() - T).max() < 1e-13
    assert np.abs(augmented_propagation(chain).toarray() - T_hat).max() < 1e-13


@pytest.mark.parametrize("seed", range(5))
def test_operator_identities(seed):
    _, chain = random_chain(50, seed)
    Tt = diglacian(chain).toarray()
    assert np.abs(Tt.sum(axis=1) - chain.pi * (1 / chain.degrees - 1)).max() < 1e-12
    T = normalized_diglacian(chain).toarray()
    Th = augmented_propagation(chain).toarray()
    assert np.abs(T - T.T).max() < 1e-12 and np.abs(Th - Th.T).max() < 1e-12
    assert np.abs(T + Th - 2 * np.diag(1 / chain.degrees)).max() < 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_spectrum_box(seed):
    rng = np.random.default_rng(seed)
    _, chain = random_chain(int(rng.integers(5, 301)), seed)
    lo, hi = spectrum_bounds(chain)
    w = la.eigvalsh(normalized_diglacian(chain).toarray())
    assert w.min() >= lo - 1e-9 and w.max() <= hi + 1e-9
    report = oracle.dense_operator_check(chain.transition, chain.pi, chain.degrees)
    assert report["box_violation"] <= 1e-9
    assert abs(report["eigenvalue_min"] - w.min()) < 1e-10 and abs(report["eigenvalue_max"] - w.max()) < 1e-10
    assert report["symmetry_residual"] < 1e-12 and report["reconstruction_residual"] < 1e-8


def test_undirected_propagation():
    A = sp.csr_matrix([[0, 1.0, 0], [0, 0, 1.0], [0, 0, 0]])
    P = undirected_propagation(A).toarray()
    expected = np.array([[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]])
    assert np.allclose(P, expected / expected.sum(axis=1, keepdims=True))


def test_rayleigh_examples():
    _, chain = random_chain(25, 0)
    assert rayleigh_quotient(np.ones(25), chain) == 0
    assert abs(rayleigh_closed_form(np.ones(25) * 3, chain)) < 1e-12
    with pytest.raises(ValueError):
        rayleigh_quotient(np.zeros(25), chain)


@given(st.integers(0, 10_000))
def test_rayleigh_forms_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 101))
    _, chain = random_chain(n, seed)
    f = rng.standard_normal(n)
    r = rayleigh_quotient(f, chain)
    assert r >= 0
    assert abs(r - rayleigh_closed_form(f, chain)) < 1e-10


def complete_chain(n):
    A = sp.csr_matrix(np.ones((n, n)) - np.eye(n))
    loops = add_self_loops(A)
    return A, stationary_distribution(row_normalize(loops), np.diff(loops.indptr))


def ring_of_cliques(cliques, size):
    n = cliques * size
    A = np.zeros((n, n))
    for c in range(cliques):
        block = slice(c * size, (c + 1) * size)
        A[block, block] = 1
        for j in range(size):
            u = c * size + j
            A[u, ((c + 1) % cliques) * size + j] = 1
            A[u, ((c - 1) % cliques) * size + j] = 1
    np.fill_diagonal(A, 0)
    A = sp.csr_matrix(A)
    loops = add_self_loops(A)
    return A, stationary_distribution(row_normalize(loops), np.diff(loops.indptr), iterations=5000, tol=1e-15)


def test_diameter_complete_graph():
    A, chain = complete_chain(8)
    res = diameter_bound_check(chain, A)
    assert res.diameter == 1 and res.holds and res.bound >= 1


@pytest.mark.parametrize("cliques, size", [(4, 4), (8, 4), (6, 5), (16, 4)])
def test_diameter_ring_of_cliques(cliques, size):
    A, chain = ring_of_cliques(cliques, size)
    res = diameter_bound_check(chain, A)
    # walk around the ring on matching positions, then one hop inside the clique
    assert res.diameter == cliques // 2 + 1
    assert res.holds


@pytest.mark.parametrize("seed", range(5))
def test_diameter_regularized_random(seed):
    A, chain = regular_chain(int(np.random.default_rng(seed).integers(10, 65)), seed)
    assert np.all(chain.degrees == chain.degrees[0])
    assert diameter_bound_check(chain, A).holds


def test_diameter_requires_regular():
    _, chain = random_chain(20, 0)
    chain_deg = chain.degrees
    if np.all(chain_deg == chain_deg[0]):
        pytest.skip("random chain happened to be regular")
    with pytest.raises(NotRegular):
        diameter_bound_check(chain)


def test_regularize_out_degree():
    A = sp.csr_matrix(np.array([[0, 1, 1, 1], [0, 0, 1, 0], [1, 0, 0, 0], [0, 0, 0, 0]], dtype=float))
    R = regularize_out_degree(A, np.arange(4))
    assert np.all(np.diff(R.indptr) == 3)
    assert (A > R).nnz == 0 and np.all(R.diagonal() == 0)
