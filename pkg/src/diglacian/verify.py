"""Cross-checks of the spectral pipeline against the brute-force oracles.

Each ``check_*`` function generates its own seeded instances and returns a
:class:`CheckResult`.  :func:`run_suite` runs them all for the ``verify``
command; the acceptance tests call them individually.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import oracle
from .fpr import (
    auxiliary_vector,
    build_combinatorial,
    l2_normalize_rows,
    mean_direction,
    neighbor_recall,
    similarity_sort,
    sorting_graph,
)
from .graph import DiGraph, add_self_loops, as_csr, row_normalize
from .markov import (
    PfprChain,
    commute_propagation,
    commute_times,
    fundamental_matrix_dense,
    fundamental_matrix_sparse,
    hitting_times,
    sparsify_commute,
    stationary_distribution,
)
from .models import PropagationSet, backward, forward, gcn_normalized, init_params, loss, adasage_operators
from .spectral import (
    augmented_propagation,
    diameter_bound_check,
    normalized_diglacian,
    rayleigh_closed_form,
    rayleigh_quotient,
    regularize_out_degree,
    undirected_propagation,
)

FAULTS = ("stationary",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    instances: int
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (threshold {self.threshold:.1e}, {self.instances} instances)"


def random_graph(n, rng, mean_degree=8.0, dim=8, symmetric=False) -> DiGraph:
    """Erdos-Renyi digraph with Gaussian node features."""
    p = min(1.0, mean_degree / max(n - 1, 1))
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    if symmetric:
        A = A | A.T
    src, dst = np.nonzero(A)
    return DiGraph.from_edges(n, src, dst, rng.standard_normal((n, dim)))


def random_chain(n, seed, mean_degree=8.0, k=2, symmetric=False, iterations=30):
    """PFPR chain of a random feature graph; returns ``(combinatorial, chain)``."""
    rng = np.random.default_rng(seed)
    g = random_graph(n, rng, mean_degree, symmetric=symmetric)
    comb = build_combinatorial(g, k, seed)
    return comb, stationary_distribution(comb.transition, comb.degrees, iterations)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _sizes(count, lo, hi):
    return np.unique(np.linspace(lo, hi, count).astype(int)).tolist() if count < hi - lo else list(range(lo, hi + 1))


@_timed
def check_fundamental_equivalence(count=50, n_min=5, n_max=200, seed=0):
    """Pseudoinverse route vs dense closed form, plus both annihilator identities."""
    sizes = np.linspace(n_min, n_max, count).astype(int)
    worst = worst_ann = 0.0
    for t, n in enumerate(sizes):
        _, chain = random_chain(int(n), seed + t)
        Zd = fundamental_matrix_dense(chain)
        Zs = fundamental_matrix_sparse(chain)
        worst = max(worst, float(np.abs(Zs - Zd).max()))
        for Z in (Zd, Zs):
            worst_ann = max(worst_ann, float(np.abs(Z.sum(axis=1)).max()), float(np.abs(chain.pi @ Z).max()))
    return CheckResult(
        "fundamental_matrix_equivalence", worst < 1e-6, worst, 1e-6, count,
        details={"annihilator_residual": worst_ann, "annihilator_passed": worst_ann < 1e-8},
    )


@_timed
def check_annihilators(count=50, n_min=5, n_max=200, seed=0):
    res = check_fundamental_equivalence(count, n_min, n_max, seed)
    value = res.details["annihilator_residual"]
    return CheckResult("fundamental_matrix_annihilators", value < 1e-8, value, 1e-8, count)


@_timed
def check_hitting_times(count=20, n_max=30, walks=100_000, seed=100):
    """Closed-form hitting times vs linear systems and Monte Carlo walks."""
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_sigma = 0.0
    for t in range(count):
        n = int(rng.integers(3, n_max + 1))
        _, chain = random_chain(n, seed + t)
        H = hitting_times(fundamental_matrix_dense(chain), chain)
        P = chain.transition.toarray()
        for j in range(n):
            h = oracle.hitting_linear_system(P, j)
            rel = np.abs(H[:, j] - h) / np.maximum(np.abs(h), 1.0)
            worst_rel = max(worst_rel, float(rel.max()))
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        mean, se = oracle.monte_carlo_hitting(P, i, j, walks, seed=seed + t)
        worst_sigma = max(worst_sigma, abs(mean - H[i, j]) / se)
    two = PfprChain(sp.csr_matrix(np.full((2, 2), 0.5)), np.array([2.0, 2.0]), np.array([0.5, 0.5]), 0, 0.0)
    h12 = hitting_times(fundamental_matrix_dense(two), two)[0, 1]
    passed = worst_rel < 1e-8 and worst_sigma < 3.0 and h12 == 2.0
    return CheckResult(
        "hitting_time_agreement", passed, worst_rel, 1e-8, count,
        details={"max_monte_carlo_sigma": worst_sigma, "two_state_h12": float(h12), "walks": walks},
    )


@_timed
def check_stationary(count=20, n_max=300, seed=200, inject_fault=None):
    """Power iteration fixed point, dense-solve agreement, undirected closed form."""
    rng = np.random.default_rng(seed)
    worst_res = worst_oracle = worst_undirected = 0.0
    max_iter = 0
    for t in range(count):
        n = int(rng.integers(5, n_max + 1))
        _, chain = random_chain(n, seed + t)
        pi = chain.pi
        if inject_fault == "stationary":
            pi = pi.copy()
            pi[0] *= 1.01
            pi /= pi.sum()
        P = chain.transition
        worst_res = max(worst_res, float(np.abs(P.T @ pi - pi).sum()))
        worst_oracle = max(worst_oracle, float(np.abs(pi - oracle.stationary_dense(P)).sum()))
        max_iter = max(max_iter, chain.iterations)

        comb, uchain = random_chain(n, seed + 1000 + t, symmetric=True)
        expected = comb.degrees / comb.degrees.sum()
        worst_undirected = max(worst_undirected, float(np.abs(uchain.pi - expected).max()))
    passed = worst_res < 1e-8 and worst_oracle < 1e-8 and worst_undirected < 1e-10 and max_iter <= 30
    return CheckResult(
        "stationary_distribution", passed, worst_res, 1e-8, count,
        details={
            "oracle_l1": worst_oracle,
            "undirected_max_error": worst_undirected,
            "max_iterations": max_iter,
        },
    )


@_timed
def check_spectrum(count=20, n_max=300, seed=300):
    """Eigenvalue box of T and the identity ``T + T_hat = 2 D~^{-1}``."""
    rng = np.random.default_rng(seed)
    worst_box = worst_complement = worst_recon = 0.0
    for t in range(count):
        n = int(rng.integers(5, n_max + 1))
        _, chain = random_chain(n, seed + t)
        report = oracle.dense_operator_check(chain.transition, chain.pi, chain.degrees)
        T = normalized_diglacian(chain).toarray()
        w = la.eigvalsh(T)
        lo, hi = 1.0 / chain.degrees.max() - 1.0, 1.0 / chain.degrees.min() + 1.0
        worst_box = max(worst_box, report["box_violation"], lo - w.min(), w.max() - hi)
        worst_recon = max(worst_recon, report["reconstruction_residual"], report["orthonormality_residual"])
        T_hat = augmented_propagation(chain).toarray()
        worst_complement = max(worst_complement, float(np.abs(T + T_hat - 2.0 * np.diag(1.0 / chain.degrees)).max()))
    return CheckResult(
        "spectrum_box", worst_box <= 1e-9 and worst_recon < 1e-8, worst_box, 1e-9, count,
        details={"complement_residual": worst_complement, "complement_passed": worst_complement < 1e-10,
                 "eigendecomposition_residual": worst_recon},
    )


@_timed
def check_complement(count=20, n_max=300, seed=300):
    res = check_spectrum(count, n_max, seed)
    value = res.details["complement_residual"]
    return CheckResult("operator_complement", value < 1e-10, value, 1e-10, count)


@_timed
def check_rayleigh(count=100, n_max=100, seed=400):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(count):
        n = int(rng.integers(3, n_max + 1))
        _, chain = random_chain(n, seed + t)
        f = rng.standard_normal(n)
        worst = max(worst, abs(rayleigh_quotient(f, chain) - rayleigh_closed_form(f, chain)))
    return CheckResult("rayleigh_identity", worst < 1e-10, worst, 1e-10, count)


def regular_chain(n, seed, mean_degree=3.0):
    """Chain of a random combinatorial graph padded to constant out-degree."""
    rng = np.random.default_rng(seed)
    g = random_graph(n, rng, mean_degree)
    Xhat, _ = l2_normalize_rows(np.abs(g.features))
    order = similarity_sort(Xhat, auxiliary_vector(mean_direction(Xhat), seed)).order
    merged = g.adjacency.maximum(sorting_graph(order, 1))
    regular = regularize_out_degree(merged, order)
    loops = add_self_loops(regular)
    chain = stationary_distribution(row_normalize(loops), np.diff(loops.indptr), iterations=2000, tol=1e-14)
    return regular, chain


@_timed
def check_diameter(count=10, n_max=64, seed=500):
    rng = np.random.default_rng(seed)
    slack = []
    complete = None
    for t in range(count):
        if t == 0:
            n = 8
            A = as_csr(np.ones((n, n)) - np.eye(n))
            loops = add_self_loops(A)
            chain = stationary_distribution(row_normalize(loops), np.diff(loops.indptr))
            adj = A
        else:
            n = int(rng.integers(10, n_max + 1))
            adj, chain = regular_chain(n, seed + t)
        res = diameter_bound_check(chain, adj)
        if t == 0:
            complete = res
        slack.append((res.bound - res.diameter, res.holds, res.literal_bound))
    passed = all(h for _, h, _ in slack)
    return CheckResult(
        "diameter_bound", passed, float(min(s for s, _, _ in slack)), 0.0, count,
        details={
            "complete_graph_bound": complete.bound,
            "complete_graph_literal_bound": complete.literal_bound,
            "literal_bound_defined": sum(lit is not None for _, _, lit in slack),
        },
    )


@_timed
def check_commute(count=20, n_max=60, mu=0.5, seed=600):
    """Commute-time positivity, sparsification counts and propagation rows."""
    rng = np.random.default_rng(seed)
    min_offdiag = np.inf
    worst_row = worst_dual = 0.0
    counts_ok = True
    for t in range(count):
        n = int(rng.integers(5, n_max + 1))
        _, chain = random_chain(n, seed + t)
        C = commute_times(hitting_times(fundamental_matrix_dense(chain), chain))
        off = C[~np.eye(n, dtype=bool)]
        min_offdiag = min(min_offdiag, float(off.min()))
        c = sparsify_commute(C, mu)
        counts_ok &= bool(np.all(np.diff(c.indptr) == n - 1 - int(np.floor(mu * n + 1e-9))))
        prop = commute_propagation(c)
        worst_row = max(worst_row, float(np.abs(np.asarray(prop.sum(axis=1)).ravel() - 1).max()))
        worst_dual = max(worst_dual, float(np.abs((prop - commute_propagation(c, stabilize=False)).toarray()).max()))
    passed = min_offdiag > 0 and counts_ok and worst_row < 1e-12 and worst_dual < 1e-12
    return CheckResult(
        "commute_propagation", passed, worst_row, 1e-12, count,
        details={"min_offdiagonal_commute": min_offdiag, "keep_counts_ok": counts_ok,
                 "stabilized_vs_plain": worst_dual},
    )


def _gradient_instance(kind, seed, n=10, d=4, hidden=5, m=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    labels = rng.integers(0, m, size=n)
    labels[:m] = np.arange(m)
    mask = np.zeros(n, dtype=bool)
    mask[: n // 2 + 2] = True
    g = random_graph(n, rng, mean_degree=3.0)
    if kind in ("diglacian", "diglacian-ct"):
        comb = build_combinatorial(g, 2, seed)
        chain = stationary_distribution(comb.transition, comb.degrees)
        M = augmented_propagation(chain)
        if kind == "diglacian-ct":
            C = commute_times(hitting_times(fundamental_matrix_dense(chain), chain))
            M = commute_propagation(sparsify_commute(C, 0.5))
        props = PropagationSet(undirected_propagation(comb.adjacency), M)
    elif kind == "adasage":
        props = adasage_operators(g.adjacency)
    elif kind == "gcn":
        props = PropagationSet(undirected=gcn_normalized(g.adjacency))
    else:
        props = PropagationSet()
    params = init_params(kind, [d, hidden, m], rng)
    if kind not in ("gcn", "mlp"):
        params.alpha, params.beta = 0.7, -0.4
    return X, props, params, labels, mask


def gradient_error(kind, seed=0, eps=1e-5, weight_decay=5e-3):
    """Largest relative error between analytic and central-difference gradients."""
    X, props, params, labels, mask = _gradient_instance(kind, seed)

    def f(p):
        probs, _ = forward(X, props, p, kind)
        return loss(probs, labels, mask, p, weight_decay)

    _, cache = forward(X, props, params, kind)
    grads = backward(cache, labels, mask, weight_decay)
    worst = 0.0
    pairs = [("W0", i) for i in range(len(params.W0))] + [("W1", i) for i in range(len(params.W1))]
    for name, i in pairs:
        W = getattr(params, name)[i]
        G = getattr(grads, name)[i]
        for idx in np.ndindex(W.shape):
            old = W[idx]
            W[idx] = old + eps
            up = f(params)
            W[idx] = old - eps
            down = f(params)
            W[idx] = old
            num = (up - down) / (2 * eps)
            worst = max(worst, abs(num - G[idx]) / max(abs(num), abs(G[idx]), 1e-6))
    if kind in ("diglacian", "diglacian-ct", "adasage"):
        for name in ("alpha", "beta"):
            old = getattr(params, name)
            setattr(params, name, old + eps)
            up = f(params)
            setattr(params, name, old - eps)
            down = f(params)
            setattr(params, name, old)
            num = (up - down) / (2 * eps)
            ana = getattr(grads, name)
            worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-6))
    return worst


@_timed
def check_gradients(kinds=("diglacian", "diglacian-ct", "adasage", "gcn"), seeds=(0, 1, 2)):
    errors = {k: max(gradient_error(k, s) for s in seeds) for k in kinds}
    worst = max(errors.values())
    return CheckResult("gradient_check", worst < 1e-4, worst, 1e-4, len(kinds) * len(seeds), details=errors)


@_timed
def check_knn_recall(n=200, k=4, seed=700):
    """Diagnostic only: recall of sorting-graph neighbors against exact kNN."""
    rng = np.random.default_rng(seed)
    g = random_graph(n, rng, mean_degree=3.0, dim=2)
    X = np.abs(g.features)
    comb = build_combinatorial(g, k, seed, features=X)
    Xhat, _ = l2_normalize_rows(X)
    knn = oracle.exact_knn(Xhat, k)
    recall = neighbor_recall(comb.sorting_adjacency, knn)
    return CheckResult("sorting_graph_knn_recall", 0.0 <= recall <= 1.0, recall, 0.0, 1,
                       details={"k": k, "dim": 2})


SUITE = (
    check_fundamental_equivalence,
    check_hitting_times,
    check_stationary,
    check_spectrum,
    check_rayleigh,
    check_diameter,
    check_commute,
    check_gradients,
    check_knn_recall,
)


def run_suite(inject_fault=None, progress=None) -> dict:
    """Run every check and return a JSON-serializable report."""
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}")
    results = []
    t0 = time.perf_counter()
    for check in SUITE:
        res = check(inject_fault=inject_fault) if check is check_stationary else check()
        if progress:
            progress(res.line())
        results.append(res)
    return {
        "passed": all(r.passed for r in results),
        "seconds": time.perf_counter() - t0,
        "injected_fault": inject_fault,
        "checks": [_jsonable(asdict(r)) for r in results],
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
