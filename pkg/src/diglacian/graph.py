"""Directed graph storage and basic sparse matrix operations.

All matrices are ``scipy.sparse.csr_matrix`` in canonical form (sorted
column indices, no duplicate entries).  Input graphs are unweighted: every
stored edge has weight 1 and self-loops from input data are dropped so that
``add_self_loops`` can add them back uniformly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import DeadEndRow, NotIrreducible

__all__ = [
    "DiGraph",
    "as_csr",
    "out_degrees",
    "add_self_loops",
    "symmetrize",
    "row_normalize",
    "is_strongly_connected",
    "is_aperiodic",
]


def as_csr(A) -> sp.csr_matrix:
    """Return ``A`` as a canonical float64 CSR matrix."""
    M = sp.csr_matrix(A, dtype=np.float64, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


@dataclass(frozen=True)
class DiGraph:
    """Unweighted directed graph with optional node features.

    Use :meth:`from_edges` to build one from raw edge lists; it deduplicates
    edges and drops self-loops.
    """

    n: int
    adjacency: sp.csr_matrix
    features: Optional[np.ndarray] = None
    dropped_self_loops: int = field(default=0, compare=False)
    duplicate_edges: int = field(default=0, compare=False)

    def __post_init__(self):
        A = self.adjacency
        if A.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {A.shape} does not match n={self.n}")
        if not A.has_canonical_format:
            raise ValueError("adjacency must be in canonical CSR form")
        if A.nnz and (not np.all(np.isfinite(A.data)) or A.data.min() < 0):
            raise ValueError("edge weights must be finite and non-negative")
        if self.features is not None and self.features.shape[0] != self.n:
            raise ValueError("feature rows do not match node count")

    @classmethod
    def from_edges(cls, n, src, dst, features=None) -> "DiGraph":
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError(f"edge endpoint outside [0, {n})")
        loops = src == dst
        src, dst = src[~loops], dst[~loops]
        keys = np.unique(src * n + dst)
        duplicates = src.size - keys.size
        rows, cols = np.divmod(keys, n)
        A = sp.csr_matrix((np.ones(keys.size), (rows, cols)), shape=(n, n))
        A.sort_indices()
        if features is not None:
            features = np.asarray(features, dtype=np.float64)
        return cls(int(n), A, features, int(loops.sum()), int(duplicates))

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.nnz)

    @property
    def has_self_loops(self) -> bool:
        return bool(np.any(self.adjacency.diagonal() != 0))

    def edge_list(self):
        """Return ``(src, dst)`` index arrays in row-major order."""
        coo = self.adjacency.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64)


def out_degrees(A) -> np.ndarray:
    """Row sums of ``A``."""
    return np.asarray(sp.csr_matrix(A).sum(axis=1), dtype=np.float64).ravel()


def add_self_loops(A) -> sp.csr_matrix:
    """Return ``A + I``."""
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return as_csr(A + sp.identity(A.shape[0], format="csr"))


def symmetrize(A) -> sp.csr_matrix:
    """Return ``(A + A^T) / 2``."""
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return as_csr((A + A.T) * 0.5)


def row_normalize(A) -> sp.csr_matrix:
    """Scale every row of ``A`` to sum to one.

    Raises
    ------
    DeadEndRow
        If some row sums to zero.
    """
    A = as_csr(A)
    deg = out_degrees(A)
    dead = np.flatnonzero(deg <= 0)
    if dead.size:
        raise DeadEndRow(dead[0])
    return as_csr(sp.diags(1.0 / deg) @ A)


def is_strongly_connected(A) -> bool:
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] == 0:
        return False
    n_comp, _ = connected_components(A, directed=True, connection="strong")
    return n_comp == 1


def period(A) -> int:
    """Period of an irreducible graph: gcd of all cycle lengths.

    Uses BFS levels from node 0; every edge ``u -> v`` contributes
    ``level[u] + 1 - level[v]`` to the gcd.
    """
    A = as_csr(A)
    if not is_strongly_connected(A):
        raise NotIrreducible("period is only defined for strongly connected graphs")
    if np.any(A.diagonal() != 0):
        return 1
    order, pred = breadth_first_order(A, 0, directed=True, return_predecessors=True)
    level = np.zeros(A.shape[0], dtype=np.int64)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    coo = A.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    g = 0
    for d in np.unique(diffs):
        g = gcd(g, int(d))
        if g == 1:
            break
    return g


def is_aperiodic(A) -> bool:
    """True iff the (strongly connected) graph has period one.

    Raises
    ------
    NotIrreducible
        If ``A`` is not strongly connected.
    """
    return period(A) == 1
