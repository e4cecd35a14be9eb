"""From a dataset to the operators each model kind consumes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .fpr import CombinatorialGraph, build_combinatorial, knn_combine
from .graph import DiGraph, add_self_loops, row_normalize
from .markov import (
    CommuteModel,
    PfprChain,
    commute_model,
    pagerank_transition,
    stationary_distribution,
)
from .models import PropagationSet, adasage_operators, gcn_normalized
from .spectral import augmented_propagation, undirected_propagation

__all__ = ["VARIANTS", "Preprocessed", "preprocess", "propagation_for"]

VARIANTS = ("fpr", "wo-feat", "knn")
PAGERANK_ALPHA = 0.85
# the teleport chain contracts by PAGERANK_ALPHA per step, so 30 steps stop
# near 1e-2; 200 steps reach machine precision
PAGERANK_ITERATIONS = 200


@dataclass(frozen=True)
class Preprocessed:
    """Everything derived from one graph for one augmentation variant."""

    variant: str
    combinatorial: Optional[CombinatorialGraph]
    chain: PfprChain
    undirected: sp.csr_matrix
    propagation: sp.spmatrix
    commute: Optional[CommuteModel] = None


def _pagerank_chain(P, degrees, iterations, tol):
    dense = pagerank_transition(P, PAGERANK_ALPHA)
    return stationary_distribution(dense, degrees, iterations, tol)


def preprocess(graph: DiGraph, k: int = 2, seed: int = 0, variant: str = "fpr",
               commute: bool = False, mu: float = 0.97, iterations: Optional[int] = None,
               tol: float = 1e-10) -> Preprocessed:
    """Build the chain, ``T_hat`` and optionally the commute-time operator.

    ``variant`` selects the augmentation: ``fpr`` is the feature-aware
    sorting graph; ``wo-feat`` replaces it by a dense PageRank teleport on the
    raw graph with self-loops (degrees are the raw out-degrees plus one);
    ``knn`` merges the exact cosine kNN graph and then applies PageRank.
    ``iterations`` defaults to 30 for ``fpr`` and to ``PAGERANK_ITERATIONS``
    for the PageRank variants.
    """
    if iterations is None:
        iterations = 30 if variant == "fpr" else PAGERANK_ITERATIONS
    if variant == "fpr":
        comb = build_combinatorial(graph, k, seed)
        chain = stationary_distribution(comb.transition, comb.degrees, iterations, tol)
        undirected = undirected_propagation(comb.adjacency)
    elif variant == "wo-feat":
        comb = None
        loops = add_self_loops(graph.adjacency)
        chain = _pagerank_chain(row_normalize(loops), np.diff(loops.indptr), iterations, tol)
        undirected = undirected_propagation(graph.adjacency)
    elif variant == "knn":
        comb = knn_combine(graph, k)
        chain = _pagerank_chain(comb.transition, comb.degrees, iterations, tol)
        undirected = undirected_propagation(comb.adjacency)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    cm = commute_model(chain, mu) if commute else None
    return Preprocessed(variant, comb, chain, undirected, augmented_propagation(chain), cm)


def propagation_for(kind: str, graph: DiGraph, pre: Optional[Preprocessed] = None) -> PropagationSet:
    if kind == "mlp":
        return PropagationSet()
    if kind == "gcn":
        return PropagationSet(undirected=gcn_normalized(graph.adjacency))
    if kind == "adasage":
        return adasage_operators(graph.adjacency)
    if pre is None:
        raise ValueError(f"model {kind!r} needs preprocessed operators")
    if kind == "diglacian":
        return PropagationSet(pre.undirected, pre.propagation)
    if kind == "diglacian-ct":
        if pre.commute is None:
            raise ValueError("diglacian-ct needs commute-time operators")
        return PropagationSet(pre.undirected, pre.commute.propagation)
    raise ValueError(f"unknown model kind {kind!r}")
