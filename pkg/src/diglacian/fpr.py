"""Feature-Aware PageRank graph augmentation.

The input digraph is merged with a sparse *similarity sorting graph*: nodes
are ordered by cosine similarity to a single auxiliary direction orthogonal to
the mean feature direction, and nodes that are close in that order are linked
by undirected edges.  The sorting graph is a path (plus skip edges), so the
merged graph is strongly connected; adding self-loops makes it aperiodic and
yields the PFPR transition matrix ``D~^{-1} A~``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateAux, ZeroMean
from .graph import (
    DiGraph,
    add_self_loops,
    as_csr,
    is_aperiodic,
    is_strongly_connected,
    out_degrees,
    row_normalize,
)

__all__ = [
    "SortedIndex",
    "CombinatorialGraph",
    "l2_normalize_rows",
    "mean_direction",
    "auxiliary_vector",
    "similarity_sort",
    "sorting_graph",
    "split_signs",
    "build_combinatorial",
    "combinatorial_from_adjacency",
    "cosine_knn",
    "knn_combine",
    "neighbor_recall",
]

_MAX_AUX_DRAWS = 16


@dataclass(frozen=True)
class SortedIndex:
    order: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True)
class CombinatorialGraph:
    """Merged graph and its PFPR transition matrix.

    Attributes
    ----------
    adjacency : csr_matrix
        Merged binary adjacency without self-loops.
    adjacency_loops : csr_matrix
        ``adjacency + I``.
    degrees : ndarray
        Row sums of ``adjacency_loops``.
    transition : csr_matrix
        Row-stochastic ``diag(1/degrees) @ adjacency_loops``.
    sorting_adjacency : csr_matrix or None
        Union of all similarity sorting graphs that were merged in.
    """

    adjacency: sp.csr_matrix
    adjacency_loops: sp.csr_matrix
    degrees: np.ndarray
    transition: sp.csr_matrix
    sorting_adjacency: Optional[sp.csr_matrix]
    k: int
    window_size: int
    seed: Optional[int]

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


def l2_normalize_rows(X):
    """Scale each row of ``X`` to unit Euclidean norm.

    Returns
    -------
    Xhat : ndarray
        Normalized rows; all-zero rows are left at zero.
    zero_rows : ndarray of bool
        Mask of rows that were zero.
    """
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    zero = norms == 0
    safe = np.where(zero, 1.0, norms)
    return X / safe[:, None], zero


def mean_direction(Xhat) -> np.ndarray:
    m = np.asarray(Xhat, dtype=np.float64).mean(axis=0)
    norm = np.linalg.norm(m)
    if norm == 0 or not np.isfinite(norm):
        raise ZeroMean("mean of normalized feature rows is the zero vector")
    return m / norm


def auxiliary_vector(xbar, seed: int, initial=None) -> np.ndarray:
    """Unit vector orthogonal to ``xbar``.

    A Gaussian vector is drawn from ``seed`` (or ``initial`` is used for the
    first attempt), its component along ``xbar`` is removed and the remainder
    normalized.  If the remainder vanishes the draw is repeated with
    ``seed + 1``, ``seed + 2``, ... up to 16 attempts.
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    for attempt in range(_MAX_AUX_DRAWS):
        if attempt == 0 and initial is not None:
            a = np.asarray(initial, dtype=np.float64).copy()
        else:
            a = np.random.default_rng(seed + attempt).standard_normal(xbar.shape[0])
        a = a - (a @ xbar) * xbar
        norm = np.linalg.norm(a)
        if norm >= 1e-12:
            a = a / norm
            # one more projection pass tightens orthogonality to ~1e-16
            a = a - (a @ xbar) * xbar
            return a / np.linalg.norm(a)
    raise DegenerateAux(
        f"no draw out of {_MAX_AUX_DRAWS} had a component orthogonal to the mean direction "
        f"(feature dimension {xbar.shape[0]})"
    )


def similarity_sort(Xhat, a) -> SortedIndex:
    """Order nodes by descending cosine similarity to ``a``; ties keep index order."""
    scores = np.asarray(Xhat, dtype=np.float64) @ np.asarray(a, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    return SortedIndex(order=order, scores=scores)


def sorting_graph(order, window_size: int) -> sp.csr_matrix:
    """Undirected graph linking ``order[i]`` with ``order[i + w]`` for ``w <= window_size``."""
    order = np.asarray(order, dtype=np.int64)
    n = order.size
    if n < 2:
        raise ValueError("sorting graph needs at least two nodes")
    if window_size < 1:
        raise ValueError("window_size must be positive")
    window_size = min(int(window_size), n - 1)
    src = np.concatenate([order[:-w] for w in range(1, window_size + 1)])
    dst = np.concatenate([order[w:] for w in range(1, window_size + 1)])
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    A.data[:] = 1.0
    return as_csr(A)


def split_signs(X):
    """Split ``X`` into its positive and negative parts, ``X = Xp + Xn``."""
    X = np.asarray(X, dtype=np.float64)
    return np.where(X > 0, X, 0.0), np.where(X < 0, X, 0.0)


def _sorting_adjacency(X, window_size, seed):
    Xhat, _ = l2_normalize_rows(X)
    xbar = mean_direction(Xhat)
    a = auxiliary_vector(xbar, seed)
    return sorting_graph(similarity_sort(Xhat, a).order, window_size)


def combinatorial_from_adjacency(merged, sorting_adjacency=None, k=0, window_size=0, seed=None):
    """Finish a merged binary adjacency into a :class:`CombinatorialGraph`."""
    merged = as_csr(merged)
    merged.setdiag(0)
    merged = as_csr(merged)
    merged.data[:] = 1.0
    with_loops = add_self_loops(merged)
    degrees = out_degrees(with_loops)
    return CombinatorialGraph(
        adjacency=merged,
        adjacency_loops=with_loops,
        degrees=degrees,
        transition=row_normalize(with_loops),
        sorting_adjacency=sorting_adjacency,
        k=int(k),
        window_size=int(window_size),
        seed=seed,
    )


def build_combinatorial(graph: DiGraph, k: int = 2, seed: int = 0, features=None) -> CombinatorialGraph:
    """Merge ``graph`` with the similarity sorting graph(s) of its features.

    Parameters
    ----------
    graph : DiGraph
        Input digraph.  Its features are used unless ``features`` is given.
    k : int
        Even number of sorting-graph neighbors per interior node; the window
        size is ``k // 2``.
    seed : int
        Seed of the auxiliary vector draw.

    Notes
    -----
    Features with negative entries are split into positive and negative
    parts.  The negative part is sign-flipped before normalization so both
    point sets lie in the non-negative orthant, and one sorting graph is built
    per non-empty part.
    """
    if k < 2 or k % 2:
        raise ValueError(f"k must be a positive even integer, got {k}")
    X = graph.features if features is None else np.asarray(features, dtype=np.float64)
    if X is None:
        raise ValueError("feature-aware augmentation needs node features")
    window = k // 2
    pos, neg = split_signs(X)
    parts = [pos] if not np.any(neg) else [pos, -neg]
    parts = [p for p in parts if np.any(p)] or [pos]
    A_s = None
    for part in parts:
        S = _sorting_adjacency(part, window, seed)
        A_s = S if A_s is None else A_s.maximum(S)
    merged = graph.adjacency.maximum(A_s)
    comb = combinatorial_from_adjacency(merged, as_csr(A_s), k=k, window_size=window, seed=seed)
    # path construction guarantees both; a failure here is a bug, not bad input
    assert is_strongly_connected(comb.adjacency_loops) and is_aperiodic(comb.adjacency_loops)
    return comb


def cosine_knn(X, k: int) -> np.ndarray:
    """Indices of the ``k`` most cosine-similar other nodes, ties by index.

    Dense ``O(N^2)`` computation, intended for the kNN ablation only.
    """
    Xhat, _ = l2_normalize_rows(X)
    n = Xhat.shape[0]
    k = min(int(k), n - 1)
    S = Xhat @ Xhat.T
    np.fill_diagonal(S, -np.inf)
    # descending similarity with ascending index as tiebreak
    idx = np.broadcast_to(np.arange(n), (n, n))
    order = np.lexsort((idx, -S), axis=1)
    return order[:, :k]


def knn_combine(graph: DiGraph, k: int, features=None) -> CombinatorialGraph:
    """Merge ``graph`` with the exact, mutualized cosine kNN graph."""
    X = graph.features if features is None else features
    if X is None:
        raise ValueError("kNN augmentation needs node features")
    nbrs = cosine_knn(X, k)
    n = graph.n
    rows = np.repeat(np.arange(n), nbrs.shape[1])
    K = as_csr(sp.csr_matrix((np.ones(rows.size), (rows, nbrs.ravel())), shape=(n, n)))
    K = K.maximum(K.T)
    return combinatorial_from_adjacency(graph.adjacency.maximum(K), as_csr(K), k=k)


def neighbor_recall(sorting_adjacency, knn_lists) -> float:
    """Fraction of exact kNN pairs that are also sorting-graph edges."""
    S = sp.csr_matrix(sorting_adjacency)
    hits = total = 0
    for i, nbrs in enumerate(knn_lists):
        row = set(S.indices[S.indptr[i]:S.indptr[i + 1]].tolist())
        hits += sum(1 for j in nbrs if int(j) in row)
        total += len(nbrs)
    return hits / total if total else 0.0
