"""Brute-force reference computations.

Nothing here imports the modules it is used to check: every routine works on
plain dense arrays with textbook algorithms so that agreement with the
production code is meaningful.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as la

from .errors import SingularSystem, WalkCapExceeded

__all__ = [
    "stationary_dense",
    "hitting_linear_system",
    "monte_carlo_hitting",
    "exact_knn",
    "dense_operator_check",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _dense(P):
    return P.toarray() if hasattr(P, "toarray") else np.asarray(P, dtype=np.float64)


def _solve(A, b):
    # scipy's diagonal fast path returns inf instead of raising on singular input
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            x = la.solve(A, b)
    except la.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("linear system is singular")
    return x


def stationary_dense(P) -> np.ndarray:
    """Solve ``pi^T (P - I) = 0`` with ``sum(pi) = 1`` directly."""
    P = _dense(P)
    n = P.shape[0]
    system = P.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return _solve(system, rhs)


def hitting_linear_system(P, target: int) -> np.ndarray:
    """Expected steps to reach ``target`` from every state.

    Solves ``(I - Q) h = 1`` where ``Q`` is ``P`` with the target row and
    column removed.
    """
    P = _dense(P)
    n = P.shape[0]
    keep = np.array([i for i in range(n) if i != target], dtype=np.int64)
    Q = P[np.ix_(keep, keep)]
    h_rest = _solve(np.eye(n - 1) - Q, np.ones(n - 1))
    h = np.zeros(n)
    h[keep] = h_rest
    return h


def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return x ^ (x >> np.uint64(31))


def _uniforms(seed, walk_ids, step):
    """Counter-based uniforms: one value per ``(seed, walk, step)`` triple.

    Each walk's stream depends only on its own index, so any partition of the
    walks across workers reproduces the same samples.
    """
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(seed) ^ np.uint64(0xD1B54A32D192ED03))
        x = _splitmix64(key ^ walk_ids.astype(np.uint64))
        x = _splitmix64(x ^ (np.uint64(step) * np.uint64(0x2545F4914F6CDD1D)))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def monte_carlo_hitting(P, start: int, target: int, walks: int = 100_000, seed: int = 0,
                        max_steps: int = 1_000_000):
    """Simulate walks from ``start`` until they first reach ``target``.

    Returns
    -------
    mean, stderr : float
        Sample mean of the hitting time and its standard error over the walks
        that reached the target.  Walks exceeding ``max_steps`` are dropped and
        reported through a :class:`WalkCapExceeded` warning.
    """
    P = _dense(P)
    if start == target:
        return 0.0, 0.0
    if walks < 2:
        raise ValueError("need at least two walks for a standard error")
    n = P.shape[0]
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    # row r of the CDF shifted into [r, r + 1] so one sorted array serves all rows
    flat = (cdf + np.arange(n)[:, None]).ravel()
    ids = np.arange(walks, dtype=np.int64)
    state = np.full(walks, start, dtype=np.int64)
    steps = np.zeros(walks, dtype=np.int64)
    active = np.ones(walks, dtype=bool)
    step = 0
    while active.any() and step < max_steps:
        live = np.flatnonzero(active)
        u = _uniforms(seed, ids[live], step)
        cur = state[live]
        pos = np.searchsorted(flat, cur + u, side="right")
        state[live] = np.minimum(pos - cur * n, n - 1)
        steps[live] += 1
        active[live[state[live] == target]] = False
        step += 1
    capped = int(active.sum())
    if capped:
        warnings.warn(f"{capped} walks exceeded {max_steps} steps", WalkCapExceeded, stacklevel=2)
    done = steps[~active].astype(np.float64)
    if done.size < 2:
        return float("nan"), float("nan")
    return float(done.mean()), float(done.std(ddof=1) / np.sqrt(done.size))


def exact_knn(Xhat, k: int):
    """Exact top-``k`` cosine neighbors of each row, ties broken by index."""
    X = np.asarray(Xhat, dtype=np.float64)
    norms = np.sqrt((X * X).sum(axis=1))
    n = X.shape[0]
    out = []
    for i in range(n):
        sims = []
        for j in range(n):
            if j == i:
                continue
            denom = norms[i] * norms[j]
            sims.append((-(float(X[i] @ X[j]) / denom) if denom else 0.0, j))
        sims.sort()
        out.append([j for _, j in sims[:k]])
    return out


def dense_operator_check(P, pi, degrees) -> dict:
    """Eigendecompose the normalized Diglacian assembled from dense arrays.

    Reports the symmetry residual, the orthonormality and reconstruction
    residuals of the eigendecomposition, the eigenvalue range and whether it
    lies inside ``[1/d_max - 1, 1/d_min + 1]``.
    """
    P = _dense(P)
    pi = np.asarray(pi, dtype=np.float64)
    d = np.asarray(degrees, dtype=np.float64)
    n = P.shape[0]
    s = np.sqrt(pi)
    S = np.empty_like(P)
    for i in range(n):
        for j in range(n):
            S[i, j] = s[i] * P[i, j] / s[j]
    T = np.diag(1.0 / d) - 0.5 * (S + S.T)
    symmetry = float(np.abs(T - T.T).max())
    w, U = la.eigh(T)
    orthonormality = float(np.abs(U.T @ U - np.eye(n)).max())
    reconstruction = float(np.abs(U @ np.diag(w) @ U.T - T).max())
    lo, hi = 1.0 / d.max() - 1.0, 1.0 / d.min() + 1.0
    return {
        "symmetry_residual": symmetry,
        "orthonormality_residual": orthonormality,
        "reconstruction_residual": reconstruction,
        "eigenvalue_min": float(w.min()),
        "eigenvalue_max": float(w.max()),
        "lower_bound": lo,
        "upper_bound": hi,
        "box_violation": float(max(lo - w.min(), w.max() - hi, 0.0)),
        "eigenvalues_real": bool(np.all(np.isreal(w))),
    }
