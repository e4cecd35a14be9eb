"""Diglacian operators and their spectral properties."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .errors import NotRegular
from .graph import add_self_loops, as_csr, out_degrees, row_normalize
from .markov import PfprChain

__all__ = [
    "diglacian",
    "normalized_diglacian",
    "augmented_propagation",
    "undirected_propagation",
    "rayleigh_quotient",
    "rayleigh_closed_form",
    "spectrum_bounds",
    "DiameterBound",
    "diameter_bound_check",
    "regularize_out_degree",
]


def diglacian(chain: PfprChain) -> sp.csr_matrix:
    """``T~ = Pi (D~^{-1} - P)``."""
    P = chain.transition
    T = sp.diags(chain.pi) @ (sp.diags(1.0 / chain.degrees) - P)
    return as_csr(T)


def _similarity_transform(chain: PfprChain):
    """``Pi^{1/2} P Pi^{-1/2}``."""
    s = np.sqrt(chain.pi)
    return sp.diags(s) @ chain.transition @ sp.diags(1.0 / s)


def normalized_diglacian(chain: PfprChain) -> sp.csr_matrix:
    """Symmetric ``D~^{-1} - (S + S^T) / 2`` with ``S = Pi^{1/2} P Pi^{-1/2}``."""
    S = _similarity_transform(chain)
    return as_csr(sp.diags(1.0 / chain.degrees) - (S + S.T) * 0.5)


def augmented_propagation(chain: PfprChain) -> sp.csr_matrix:
    """Directed propagation matrix ``D~^{-1} + (S + S^T) / 2``.

    This is the symmetric part of ``Pi^{1/2} (D~^{-1} + P) Pi^{-1/2}``; it
    satisfies ``T + T_hat = 2 D~^{-1}`` with :func:`normalized_diglacian`.
    """
    S = _similarity_transform(chain)
    return as_csr(sp.diags(1.0 / chain.degrees) + (S + S.T) * 0.5)


def undirected_propagation(adjacency) -> sp.csr_matrix:
    """Row-normalized symmetrization of ``adjacency + I``."""
    A = add_self_loops(sp.csr_matrix(adjacency))
    return row_normalize((A + A.T) * 0.5)


def rayleigh_quotient(f, chain: PfprChain) -> float:
    """Edge-sum form ``sum_ij |f_i - f_j|^2 pi_i P_ij / sum_k |f_k|^2 pi_k``."""
    f = np.asarray(f, dtype=np.float64)
    coo = chain.transition.tocoo()
    num = np.sum((f[coo.row] - f[coo.col]) ** 2 * chain.pi[coo.row] * coo.data)
    den = np.sum(f ** 2 * chain.pi)
    if den == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(num / den)


def rayleigh_closed_form(f, chain: PfprChain) -> float:
    """``2 g (T + I - D~^{-1}) g^T / (g g^T)`` with ``g = f^T Pi^{1/2}``."""
    g = np.asarray(f, dtype=np.float64) * np.sqrt(chain.pi)
    den = g @ g
    if den == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    K = normalized_diglacian(chain) + sp.identity(chain.n) - sp.diags(1.0 / chain.degrees)
    return float(2.0 * (g @ (K @ g)) / den)


def spectrum_bounds(chain: PfprChain):
    """Interval ``[1/d_max - 1, 1/d_min + 1]`` containing the spectrum of ``T``."""
    return 1.0 / chain.degrees.max() - 1.0, 1.0 / chain.degrees.min() + 1.0


@dataclass(frozen=True)
class DiameterBound:
    """Diameter bound evaluation on a regular combinatorial graph.

    ``bound`` uses the normalized-Laplacian eigenvalue
    ``lam_laplacian = lam + 1 - 1/d`` in ``log(2 / (2 - lam_laplacian))``.
    ``literal_bound`` evaluates ``log(1 / (1 - d * lam))`` directly and is
    ``None`` when ``1 - d * lam`` falls outside ``[0, 1)``, where that log is
    undefined or non-positive.
    """

    bound: int
    literal_bound: int | None
    diameter: int
    holds: bool
    eigenvalue: float
    degree: float


def _bound(max_log, denom):
    if denom == math.inf:
        return 1
    return int(math.floor(2.0 * max_log / denom)) + 1


def diameter_bound_check(chain: PfprChain, adjacency=None) -> DiameterBound:
    """Compare the spectral diameter bound with the BFS diameter.

    Parameters
    ----------
    chain : PfprChain
        Chain of a regular combinatorial graph (constant degree).
    adjacency : sparse matrix, optional
        Adjacency whose directed diameter is measured; defaults to the
        support of the transition matrix.
    """
    d = chain.degrees
    if not np.allclose(d, d[0], rtol=0, atol=1e-12):
        raise NotRegular(f"degrees range over [{d.min()}, {d.max()}]")
    d = float(d[0])
    T = normalized_diglacian(chain).toarray()
    evals = la.eigvalsh((T + T.T) * 0.5)
    lam = float(evals[1]) if evals.size > 1 else float(evals[0])

    max_log = float(np.max(np.log(1.0 / chain.pi)))
    lam_lap = lam + 1.0 - 1.0 / d
    ratio = 2.0 / (2.0 - lam_lap)
    bound = _bound(max_log, math.log(ratio) if lam_lap < 2 else math.inf) if lam_lap > 0 else None

    x = 1.0 - d * lam
    if abs(x) < 1e-12:
        literal = 1
    elif 0.0 < x < 1.0:
        literal = _bound(max_log, math.log(1.0 / x))
    else:
        literal = None

    support = adjacency if adjacency is not None else chain.transition
    S = sp.csr_matrix(support, dtype=np.float64)
    dist = shortest_path(S, directed=True, unweighted=True)
    diameter = int(np.max(dist)) if np.all(np.isfinite(dist)) else -1
    holds = bound is not None and diameter >= 0 and diameter <= bound
    return DiameterBound(
        bound=bound if bound is not None else -1,
        literal_bound=literal,
        diameter=diameter,
        holds=bool(holds),
        eigenvalue=lam,
        degree=d,
    )


def regularize_out_degree(adjacency, order) -> sp.csr_matrix:
    """Pad out-degrees to the maximum with extra edges along a node order.

    Node ``v`` receives ``k_v = d_max - d_v`` new out-neighbors, chosen as the
    nodes nearest to ``v`` in ``order`` that it does not already point to.
    The input is a binary adjacency without self-loops.
    """
    A = sp.lil_matrix(sp.csr_matrix(adjacency))
    n = A.shape[0]
    order = np.asarray(order, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    deg = out_degrees(A.tocsr())
    d_max = int(deg.max())
    if d_max > n - 1:
        raise ValueError("maximum degree exceeds n - 1")
    for v in range(n):
        need = d_max - int(deg[v])
        if need == 0:
            continue
        existing = set(A.rows[v])
        p = pos[v]
        for offset in range(1, n):
            for q in (p - offset, p + offset):
                if need and 0 <= q < n:
                    u = int(order[q])
                    if u != v and u not in existing:
                        A[v, u] = 1.0
                        existing.add(u)
                        need -= 1
            if not need:
                break
    return as_csr(A.tocsr())
