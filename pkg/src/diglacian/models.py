"""Two-layer propagation models with hand-written gradients.

Every model kind shares one layer template::

    Z = H W0 + (alpha * P_u + beta * M) H W1

``diglacian`` uses ``M = T_hat``, ``diglacian-ct`` the commute-time
propagation matrix, ``adasage`` the row-normalized raw adjacency.  ``gcn``
drops the self term and uses a single fixed operator ``A_norm``; ``mlp`` keeps
only ``H W0``.  Hidden layers apply ReLU, the last layer feeds a row softmax.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import EmptyMask, ShapeMismatch
from .graph import add_self_loops, as_csr, out_degrees, symmetrize

MODEL_KINDS = ("diglacian", "diglacian-ct", "adasage", "gcn", "mlp")
DUAL_KINDS = ("diglacian", "diglacian-ct", "adasage")


@dataclass(frozen=True)
class PropagationSet:
    """Operators consumed by a layer.

    ``undirected`` is the row-stochastic symmetrized operator weighted by
    alpha and ``directed`` the operator weighted by beta.  For ``gcn`` only
    ``undirected`` is used (as the normalized adjacency); ``mlp`` uses none.
    """

    undirected: Optional[object] = None
    directed: Optional[object] = None

    def check(self, n):
        for op in (self.undirected, self.directed):
            if op is not None and op.shape != (n, n):
                raise ShapeMismatch(f"propagation matrix shape {op.shape} does not match n={n}")


@dataclass
class Params:
    W0: list = field(default_factory=list)
    W1: list = field(default_factory=list)
    alpha: float = 0.5
    beta: float = 0.5

    def copy(self):
        return replace(self, W0=[w.copy() for w in self.W0], W1=[w.copy() for w in self.W1])

    def arrays(self):
        """Weight matrices in a fixed order (W0 layers then W1 layers)."""
        return self.W0 + self.W1


def _rownorm_or_zero(A):
    deg = out_degrees(A)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return as_csr(sp.diags(inv) @ A)


def gcn_normalized(adjacency) -> sp.csr_matrix:
    """``D~^{-1/2} A~ D~^{-1/2}`` of the symmetrized graph with self-loops."""
    A = add_self_loops(symmetrize(adjacency))
    d = out_degrees(A)
    s = sp.diags(1.0 / np.sqrt(d))
    return as_csr(s @ A @ s)


def adasage_operators(adjacency) -> PropagationSet:
    """``D_u^{-1} A_u`` and ``D^{-1} A`` on the raw graph; empty rows stay zero."""
    A = sp.csr_matrix(adjacency)
    return PropagationSet(_rownorm_or_zero(symmetrize(A)), _rownorm_or_zero(A))


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(kind, dims, rng) -> Params:
    """Glorot-initialized parameters for layer widths ``dims``."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    p = Params()
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        if kind != "gcn":
            p.W0.append(glorot(rng, d_in, d_out))
        if kind != "mlp":
            p.W1.append(glorot(rng, d_in, d_out))
    return p


def softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


@dataclass
class Cache:
    kind: str
    props: PropagationSet
    inputs: list  # post-dropout layer inputs
    masks: list  # dropout multipliers, or None
    pre: list  # pre-activations
    mixed: list  # (P_u G, M G) per layer for dual kinds
    probs: np.ndarray
    params: Params


def forward(X, props: PropagationSet, params: Params, kind: str, dropout: float = 0.0,
            rng=None, training: bool = False):
    """Run the network, returning ``(probs, cache)``.

    Dropout with inverted scaling is applied to the input of every layer when
    ``training`` is set.
    """
    H = np.asarray(X, dtype=np.float64)
    n = H.shape[0]
    props.check(n)
    n_layers = max(len(params.W0), len(params.W1))
    cache = Cache(kind, props, [], [], [], [], None, params)
    for layer in range(n_layers):
        if training and dropout > 0:
            keep = rng.random(H.shape) >= dropout
            mask = keep / (1.0 - dropout)
            H = H * mask
        else:
            mask = None
        cache.inputs.append(H)
        cache.masks.append(mask)
        W0 = params.W0[layer] if params.W0 else None
        W1 = params.W1[layer] if params.W1 else None
        for W in (W0, W1):
            if W is not None and W.shape[0] != H.shape[1]:
                raise ShapeMismatch(f"layer {layer}: input width {H.shape[1]} vs weight {W.shape}")
        Z = H @ W0 if W0 is not None else 0.0
        mixed = None
        if W1 is not None:
            G = H @ W1
            if kind == "gcn":
                Z = Z + props.undirected @ G
            else:
                PG = props.undirected @ G
                MG = props.directed @ G
                mixed = (PG, MG)
                Z = Z + params.alpha * PG + params.beta * MG
        cache.pre.append(Z)
        cache.mixed.append(mixed)
        H = np.maximum(Z, 0.0) if layer < n_layers - 1 else Z
    cache.probs = softmax(H)
    return cache.probs, cache


def _one_hot(labels, m):
    Y = np.zeros((labels.size, m))
    Y[np.arange(labels.size), labels] = 1.0
    return Y


def _mask_index(mask, n):
    mask = np.asarray(mask)
    idx = np.flatnonzero(mask) if mask.dtype == bool else mask.astype(np.int64)
    if idx.size == 0:
        raise EmptyMask("mask selects no nodes")
    if idx.max() >= n:
        raise ShapeMismatch("mask index out of range")
    return idx


def loss(probs, labels, mask, params: Params, weight_decay: float = 0.0) -> float:
    """Masked mean cross-entropy plus ``weight_decay / 2 * sum ||W||^2``."""
    idx = _mask_index(mask, probs.shape[0])
    p = probs[idx, np.asarray(labels)[idx]]
    ce = -np.mean(np.log(np.clip(p, 1e-300, None)))
    reg = 0.5 * weight_decay * sum(float(np.sum(W * W)) for W in params.arrays())
    return float(ce + reg)


def backward(cache: Cache, labels, mask, weight_decay: float = 0.0, scale: float = 1.0):
    """Gradients of :func:`loss` with respect to every parameter.

    Returns a :class:`Params` holding gradients in place of values.
    """
    params, props, kind = cache.params, cache.props, cache.kind
    n, m = cache.probs.shape
    idx = _mask_index(mask, n)
    labels = np.asarray(labels)
    dZ = np.zeros((n, m))
    dZ[idx] = (cache.probs[idx] - _one_hot(labels[idx], m)) / idx.size
    grads = Params(
        W0=[np.zeros_like(W) for W in params.W0],
        W1=[np.zeros_like(W) for W in params.W1],
        alpha=0.0,
        beta=0.0,
    )
    n_layers = len(cache.inputs)
    for layer in reversed(range(n_layers)):
        H = cache.inputs[layer]
        dH = np.zeros_like(H)
        if params.W0:
            W0 = params.W0[layer]
            grads.W0[layer] = H.T @ dZ
            dH += dZ @ W0.T
        if params.W1:
            W1 = params.W1[layer]
            if kind == "gcn":
                dG = props.undirected.T @ dZ
            else:
                PG, MG = cache.mixed[layer]
                grads.alpha += float(np.sum(dZ * PG))
                grads.beta += float(np.sum(dZ * MG))
                dG = params.alpha * (props.undirected.T @ dZ) + params.beta * (props.directed.T @ dZ)
            grads.W1[layer] = H.T @ dG
            dH += dG @ W1.T
        if cache.masks[layer] is not None:
            dH = dH * cache.masks[layer]
        if layer > 0:
            dZ = dH * (cache.pre[layer - 1] > 0)
    for g, W in zip(grads.W0 + grads.W1, params.W0 + params.W1):
        g += weight_decay * W
    if scale != 1.0:
        grads.W0 = [g * scale for g in grads.W0]
        grads.W1 = [g * scale for g in grads.W1]
        grads.alpha *= scale
        grads.beta *= scale
    if kind not in DUAL_KINDS:
        grads.alpha = grads.beta = 0.0
    return grads


def predict(probs) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    return np.argmax(probs, axis=1)


def accuracy(probs, labels, mask) -> float:
    idx = _mask_index(mask, probs.shape[0])
    return float(np.mean(predict(probs[idx]) == np.asarray(labels)[idx]))
