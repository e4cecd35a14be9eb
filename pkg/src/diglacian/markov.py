"""Markov chain quantities of the PFPR random walk.

Stationary distribution by power iteration, the fundamental matrix (dense
closed form and the Diglacian pseudoinverse route), hitting and commute
times, and the sparsified commute-time propagation matrix.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, svds

from .errors import EigensolverFailure, EmptyRow, NotConvergedWarning, SingularSystem
from .graph import as_csr

__all__ = [
    "PfprChain",
    "pagerank_transition",
    "stationary_distribution",
    "chain_from_combinatorial",
    "fundamental_matrix_dense",
    "fundamental_matrix_sparse",
    "fundamental_matrix",
    "pseudoinverse_operator",
    "hitting_times",
    "commute_times",
    "sparsify_commute",
    "commute_propagation",
    "CommuteModel",
    "commute_model",
]

DEFAULT_ITERATIONS = 30
DEFAULT_TOL = 1e-10
NOT_CONVERGED_LEVEL = 1e-6
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class PfprChain:
    """Row-stochastic transition matrix with its degrees and stationary vector."""

    transition: sp.csr_matrix
    degrees: np.ndarray
    pi: np.ndarray
    iterations: int
    residual: float

    @property
    def n(self) -> int:
        return self.transition.shape[0]


def pagerank_transition(P, alpha: float) -> np.ndarray:
    """Dense PageRank matrix ``alpha * P + (1 - alpha) * J / N``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    P = P.toarray() if sp.issparse(P) else np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    return alpha * P + (1.0 - alpha) / n


def stationary_distribution(P, degrees=None, iterations: int = DEFAULT_ITERATIONS,
                            tol: float = DEFAULT_TOL) -> PfprChain:
    """Approximate the stationary distribution of ``P`` by power iteration.

    Starts from the uniform vector and applies ``pi <- pi P`` followed by L1
    renormalization, stopping after ``iterations`` steps or once
    ``||pi P - pi||_1 < tol``.  A :class:`NotConvergedWarning` is emitted when
    the final residual exceeds 1e-6; the chain is returned regardless.

    Parameters
    ----------
    P : sparse or dense matrix
        Row-stochastic, irreducible and aperiodic.
    degrees : array_like, optional
        Degree vector stored with the chain.  Defaults to the number of stored
        entries per row, which is the degree of a binary adjacency.
    """
    dense_input = not sp.issparse(P)
    P = np.asarray(P, dtype=np.float64) if dense_input else as_csr(P)
    n = P.shape[0]
    if degrees is None:
        if dense_input:
            degrees = np.count_nonzero(P, axis=1).astype(np.float64)
        else:
            degrees = np.diff(P.indptr).astype(np.float64)
    PT = P.T if dense_input else P.T.tocsr()
    pi = np.full(n, 1.0 / n)
    used = 0
    for used in range(1, iterations + 1):
        nxt = PT @ pi
        nxt /= nxt.sum()
        step = np.abs(nxt - pi).sum()
        pi = nxt
        if step < tol:
            break
    residual = float(np.abs(PT @ pi - pi).sum())
    if residual > NOT_CONVERGED_LEVEL:
        warnings.warn(
            f"power iteration residual {residual:.3e} after {used} iterations",
            NotConvergedWarning,
            stacklevel=2,
        )
    if np.any(pi <= 0):
        raise ValueError("stationary vector has non-positive entries; chain is not irreducible")
    return PfprChain(
        transition=sp.csr_matrix(P) if dense_input else P,
        degrees=np.asarray(degrees, dtype=np.float64),
        pi=pi,
        iterations=used,
        residual=residual,
    )


def chain_from_combinatorial(comb, iterations=DEFAULT_ITERATIONS, tol=DEFAULT_TOL) -> PfprChain:
    return stationary_distribution(comb.transition, comb.degrees, iterations, tol)


def _dense(P):
    return P.toarray() if sp.issparse(P) else np.asarray(P, dtype=np.float64)


def fundamental_matrix_dense(chain: PfprChain) -> np.ndarray:
    """``Z = (I - P + e pi^T)^{-1} - e pi^T`` by a dense solve."""
    P = _dense(chain.transition)
    n = P.shape[0]
    limit = np.broadcast_to(chain.pi, (n, n))
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = la.solve(np.eye(n) - P + limit, np.eye(n))
    except (la.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"fundamental matrix solve failed: {exc}") from exc
    if not np.all(np.isfinite(inv)):
        raise SingularSystem("fundamental matrix system is singular")
    return inv - limit


def pseudoinverse_operator(chain: PfprChain, diglacian=None) -> sp.csr_matrix:
    """``Pi^{-1/2} T~ Pi^{-1/2} - D~^{-1} + I`` built from the Diglacian ``T~``."""
    if diglacian is None:
        from .spectral import diglacian as _diglacian

        diglacian = _diglacian(chain)
    inv_sqrt = sp.diags(1.0 / np.sqrt(chain.pi))
    M = inv_sqrt @ sp.csr_matrix(diglacian) @ inv_sqrt
    M = M - sp.diags(1.0 / chain.degrees) + sp.identity(chain.n)
    return as_csr(M)


def fundamental_matrix_sparse(chain: PfprChain, diglacian=None, rank=None,
                              rel_cutoff: float = 1e-10) -> np.ndarray:
    """Fundamental matrix through the pseudoinverse of the scaled Diglacian.

    ``Z = Pi^{-1/2} M^+ Pi^{1/2}`` with ``M = Pi^{-1/2} T~ Pi^{-1/2} - D~^{-1} + I``.
    ``M^+`` comes from a truncated SVD computed by ARPACK (implicitly
    restarted Lanczos); singular values below ``rel_cutoff * sigma_max`` are
    discarded.  ``rank`` defaults to ``N - 1``, the exact rank of ``M``.
    """
    M = pseudoinverse_operator(chain, diglacian)
    n = chain.n
    if n == 1:
        return np.zeros((1, 1))
    rank = n - 1 if rank is None else int(rank)
    if not 1 <= rank <= n - 1:
        raise ValueError(f"rank must lie in [1, {n - 1}], got {rank}")
    try:
        U, s, Vt = svds(M, k=rank, solver="arpack", random_state=0)
    except (ArpackNoConvergence, ArpackError) as exc:
        raise EigensolverFailure(
            f"ARPACK failed computing {rank} singular triplets of an {n}x{n} operator",
            {"n": n, "rank": rank, "nnz": int(M.nnz), "error": str(exc)},
        ) from exc
    keep = s > rel_cutoff * s.max()
    M_pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    sqrt_pi = np.sqrt(chain.pi)
    return (M_pinv / sqrt_pi[:, None]) * sqrt_pi[None, :]


def fundamental_matrix(chain: PfprChain, method: str = "auto") -> np.ndarray:
    if method == "auto":
        method = "dense" if chain.n <= DENSE_LIMIT else "sparse"
    if method == "dense":
        return fundamental_matrix_dense(chain)
    if method == "sparse":
        return fundamental_matrix_sparse(chain)
    raise ValueError(f"unknown method {method!r}")


def hitting_times(Z, chain: PfprChain) -> np.ndarray:
    """``H[i, j] = (Z[j, j] - Z[i, j]) / pi[j]``."""
    Z = np.asarray(Z, dtype=np.float64)
    H = (np.diag(Z)[None, :] - Z) / chain.pi[None, :]
    np.fill_diagonal(H, 0.0)
    return H


def commute_times(H) -> np.ndarray:
    C = np.asarray(H, dtype=np.float64)
    C = C + C.T
    np.fill_diagonal(C, 0.0)
    return C


def _drop_count(mu, n):
    # guard against mu * n landing just below an integer, e.g. 0.29 * 100
    return int(math.floor(mu * n + 1e-9))


def sparsify_commute(C, mu: float) -> sp.csr_matrix:
    """Drop the ``floor(mu * N)`` largest off-diagonal entries of every row.

    Ties at the cutoff keep the entry with the lower column index.  The
    diagonal is never stored.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    C = np.asarray(C, dtype=np.float64)
    n = C.shape[0]
    n_keep = max(n - 1 - _drop_count(mu, n), 0)
    cols = np.arange(n)
    rows_out, cols_out, vals_out = [], [], []
    for i in range(n):
        others = np.delete(cols, i)
        vals = C[i, others]
        order = np.lexsort((others, vals))[:n_keep]
        rows_out.append(np.full(order.size, i))
        cols_out.append(others[order])
        vals_out.append(vals[order])
    rows = np.concatenate(rows_out) if rows_out else np.empty(0, dtype=np.int64)
    out = sp.csr_matrix(
        (np.concatenate(vals_out), (rows, np.concatenate(cols_out))), shape=(n, n)
    )
    out.sort_indices()
    return out


def commute_propagation(c, stabilize: bool = True) -> sp.csr_matrix:
    """Row-normalized ``exp(-c)`` over the stored positive entries of ``c``.

    Structural zeros stay zero.  With ``stabilize`` each row's minimum kept
    value is subtracted before exponentiation; the shift cancels in the row
    normalization.

    Raises
    ------
    EmptyRow
        If a row has no positive stored entry.
    """
    c = sp.csr_matrix(c, dtype=np.float64, copy=True)
    c.sort_indices()
    data = c.data.copy()
    data[data <= 0] = 0.0
    c.data = data
    c.eliminate_zeros()
    counts = np.diff(c.indptr)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyRow(empty[0])
    row_of = np.repeat(np.arange(c.shape[0]), counts)
    vals = c.data
    if stabilize:
        row_min = np.minimum.reduceat(vals, c.indptr[:-1])
        vals = vals - row_min[row_of]
    weights = np.exp(-vals)
    sums = np.add.reduceat(weights, c.indptr[:-1])
    out = sp.csr_matrix((weights / sums[row_of], c.indices.copy(), c.indptr.copy()), shape=c.shape)
    return out


@dataclass(frozen=True)
class CommuteModel:
    fundamental: np.ndarray
    hitting: np.ndarray
    commute: np.ndarray
    sparsified: sp.csr_matrix
    propagation: sp.csr_matrix
    mu: float


def commute_model(chain: PfprChain, mu: float = 0.97, method: str = "auto") -> CommuteModel:
    """Full commute-time pipeline from a chain to the propagation matrix."""
    Z = fundamental_matrix(chain, method)
    H = hitting_times(Z, chain)
    C = commute_times(H)
    c = sparsify_commute(C, mu)
    return CommuteModel(Z, H, C, c, commute_propagation(c), mu)
