"""Full-graph training loop with Adam and validation-accuracy early stopping."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import (
    DUAL_KINDS,
    MODEL_KINDS,
    Params,
    PropagationSet,
    accuracy,
    backward,
    forward,
    init_params,
    loss,
)

__all__ = ["TrainConfig", "TrainResult", "Adam", "train", "evaluate"]


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 64
    lr: float = 0.01
    weight_decay: float = 5e-4
    dropout: float = 0.5
    patience: int = 500
    max_epochs: int = 1000
    layers: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1 or self.layers < 1:
            raise ValueError("hidden size and layer count must be positive")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ValueError("learning rate must be positive and weight decay non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be positive")


class Adam:
    """Adam over a flat list of arrays (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, values, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = []
        for i, (x, g) in enumerate(zip(values, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            out.append(x - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps))
        return out


def _flatten(p: Params, kind):
    vals = list(p.W0) + list(p.W1)
    if kind in DUAL_KINDS:
        vals += [np.array(p.alpha), np.array(p.beta)]
    return vals


def _unflatten(vals, template: Params, kind) -> Params:
    n0, n1 = len(template.W0), len(template.W1)
    p = Params(W0=list(vals[:n0]), W1=list(vals[n0:n0 + n1]), alpha=template.alpha, beta=template.beta)
    if kind in DUAL_KINDS:
        p.alpha = float(vals[n0 + n1])
        p.beta = float(vals[n0 + n1 + 1])
    return p


@dataclass
class TrainResult:
    params: Params
    best_epoch: int
    best_val_accuracy: float
    epochs_run: int
    history: dict = field(default_factory=dict)


def train(kind, X, props: PropagationSet, labels, train_mask, val_mask,
          config: TrainConfig = TrainConfig()) -> TrainResult:
    """Train a model and return the best-validation snapshot.

    Training stops once validation accuracy has not improved for
    ``config.patience`` epochs, or after ``config.max_epochs``.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    rng = np.random.default_rng(config.seed)
    labels = np.asarray(labels, dtype=np.int64)
    m = int(labels.max()) + 1
    dims = [X.shape[1]] + [config.hidden] * (config.layers - 1) + [m]
    params = init_params(kind, dims, rng)
    opt = Adam([v.shape for v in _flatten(params, kind)], config.lr)

    history = {k: [] for k in ("train_loss", "val_loss", "train_acc", "val_acc", "alpha", "beta")}
    best = params.copy()
    best_acc, best_epoch, since = -1.0, 0, 0
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        probs, cache = forward(X, props, params, kind, config.dropout, rng, training=True)
        train_loss = loss(probs, labels, train_mask, params, config.weight_decay)
        grads = backward(cache, labels, train_mask, config.weight_decay)
        params = _unflatten(opt.step(_flatten(params, kind), _flatten(grads, kind)), params, kind)

        eval_probs, _ = forward(X, props, params, kind)
        val_acc = accuracy(eval_probs, labels, val_mask)
        history["train_loss"].append(train_loss)
        history["val_loss"].append(loss(eval_probs, labels, val_mask, params, config.weight_decay))
        history["train_acc"].append(accuracy(eval_probs, labels, train_mask))
        history["val_acc"].append(val_acc)
        history["alpha"].append(params.alpha)
        history["beta"].append(params.beta)
        if val_acc > best_acc:
            best, best_acc, best_epoch, since = params.copy(), val_acc, epoch, 0
        else:
            since += 1
            if since >= config.patience:
                break
    return TrainResult(best, best_epoch, best_acc, epoch, history)


def evaluate(kind, X, props, params: Params, labels, mask) -> float:
    probs, _ = forward(X, props, params, kind)
    return accuracy(probs, labels, mask)
