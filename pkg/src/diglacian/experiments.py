"""Synthetic benchmarks: heterophily model comparison and preprocessing scaling."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SynthConfig, edge_homophily, generate_synthetic, make_splits
from .fpr import auxiliary_vector, l2_normalize_rows, mean_direction, similarity_sort
from .graph import DiGraph
from .pipeline import preprocess, propagation_for
from .train import TrainConfig, evaluate, train


@dataclass
class BenchmarkResult:
    models: tuple
    accuracy: dict = field(default_factory=dict)  # model -> list of test accuracies
    homophily: list = field(default_factory=list)
    alpha: dict = field(default_factory=dict)  # model -> final alpha per run
    beta: dict = field(default_factory=dict)
    seconds: float = 0.0

    def mean(self, model):
        return float(np.mean(self.accuracy[model]))

    def std(self, model):
        return float(np.std(self.accuracy[model]))


def heterophily_benchmark(models=("gcn", "diglacian", "diglacian-ct"), seeds=range(10), n_splits=5,
                          synth=SynthConfig(), config=TrainConfig(max_epochs=200, patience=100),
                          mu=0.97, k=2) -> BenchmarkResult:
    """Train every model on every (seed, split) of a synthetic graph family.

    Each seed draws a fresh graph from ``synth`` (with its seed replaced) and
    ``n_splits`` stratified splits; model initialization uses the same seed.
    """
    t0 = time.perf_counter()
    res = BenchmarkResult(tuple(models))
    for m in models:
        res.accuracy[m], res.alpha[m], res.beta[m] = [], [], []
    need_commute = "diglacian-ct" in models
    for seed in seeds:
        ds = generate_synthetic(SynthConfig(**{**synth.__dict__, "seed": int(seed)}))
        res.homophily.append(edge_homophily(ds.graph, ds.labels))
        pre = preprocess(ds.graph, k, int(seed), commute=need_commute, mu=mu)
        splits = make_splits(ds.labels, n_splits=n_splits, seed=int(seed))
        for model in models:
            props = propagation_for(model, ds.graph, pre)
            for i, split in enumerate(splits):
                masks = [np.zeros(ds.n, dtype=bool) for _ in range(3)]
                for mask, idx in zip(masks, (split.train, split.val, split.test)):
                    mask[idx] = True
                cfg = TrainConfig(**{**config.__dict__, "seed": int(seed) * 1000 + i})
                out = train(model, ds.features, props, ds.labels, masks[0], masks[1], cfg)
                res.accuracy[model].append(evaluate(model, ds.features, props, out.params, ds.labels, masks[2]))
                res.alpha[model].append(out.params.alpha)
                res.beta[model].append(out.params.beta)
    res.seconds = time.perf_counter() - t0
    return res


def random_sparse_graph(n, num_edges, dim=16, seed=0) -> DiGraph:
    """Uniform random digraph with exactly ``num_edges`` distinct non-loop edges."""
    rng = np.random.default_rng(seed)
    chosen = np.empty(0, dtype=np.int64)
    while chosen.size < num_edges:
        draw = rng.integers(0, n * n, size=2 * (num_edges - chosen.size))
        draw = draw[draw // n != draw % n]
        chosen = np.concatenate([chosen, draw])
        _, first = np.unique(chosen, return_index=True)
        chosen = chosen[np.sort(first)]
    chosen = chosen[:num_edges]
    return DiGraph.from_edges(n, chosen // n, chosen % n, rng.standard_normal((n, dim)))


@dataclass
class ScalingPoint:
    n: int
    num_edges: int
    nnz_transition: int
    nnz_limit: int
    seconds: float
    sort_seconds: float


def preprocessing_scaling(sizes=(2500, 5000, 10000), edges_per_node=10, k=2, seed=0, repeats=3):
    """Time chain construction on growing random graphs.

    Reports the best of ``repeats`` wall times for the full preprocessing
    and for the similarity sort alone.
    """
    points = []
    for n in sizes:
        g = random_sparse_graph(n, edges_per_node * n, seed=seed)
        best = best_sort = np.inf
        pre = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            pre = preprocess(g, k, seed)
            best = min(best, time.perf_counter() - t0)
            t0 = time.perf_counter()
            Xhat, _ = l2_normalize_rows(g.features)
            similarity_sort(Xhat, auxiliary_vector(mean_direction(Xhat), seed))
            best_sort = min(best_sort, time.perf_counter() - t0)
        m = g.num_edges
        points.append(ScalingPoint(n, m, int(pre.chain.transition.nnz), m + 2 * n * k + n, best, best_sort))
    return points


def scaling_exponent(points, attr="seconds"):
    """Least-squares slope of log time against log n."""
    x = np.log([p.n for p in points])
    y = np.log([getattr(p, attr) for p in points])
    return float(np.polyfit(x, y, 1)[0])


def undirected_structure_task(seed, n=500, classes=3, homophily=0.9, mean_degree=5.0, dim=16, snr=0.5):
    """Homophilous planted partition whose edge directions are coin flips.

    Labels are recoverable from the undirected neighborhood, while the
    orientation of every edge carries no information.
    """
    ds = generate_synthetic(SynthConfig(n, classes, homophily, mean_degree, dim, snr, seed))
    rng = np.random.default_rng(seed)
    src, dst = ds.graph.edge_list()
    flip = rng.random(src.size) < 0.5
    g = DiGraph.from_edges(ds.n, np.where(flip, dst, src), np.where(flip, src, dst), ds.features)
    return Dataset(g, ds.labels, make_splits(ds.labels, n_splits=1, seed=seed))


def direction_recovery(seeds=range(10), config=TrainConfig(max_epochs=200, patience=100)):
    """Final (alpha, beta, test accuracy) of DiglacianGCN per seed on the task above."""
    out = []
    for seed in seeds:
        ds = undirected_structure_task(int(seed))
        pre = preprocess(ds.graph, 2, int(seed))
        props = propagation_for("diglacian", ds.graph, pre)
        split = ds.splits[0]
        masks = [np.zeros(ds.n, dtype=bool) for _ in range(3)]
        for mask, idx in zip(masks, (split.train, split.val, split.test)):
            mask[idx] = True
        res = train("diglacian", ds.features, props, ds.labels, masks[0], masks[1],
                    TrainConfig(**{**config.__dict__, "seed": int(seed)}))
        acc = evaluate("diglacian", ds.features, props, res.params, ds.labels, masks[2])
        out.append((res.params.alpha, res.params.beta, acc))
    return out
