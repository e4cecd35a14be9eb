"""Dataset files, synthetic heterophilous graphs, splits and edge homophily.

On-disk formats
---------------
edges     TSV, one ``src<TAB>dst`` pair of integer node indices per line
features  TSV, one row of floats per node
labels    one integer class index per line
splits    JSON, ``{"train": [...], "val": [...], "test": [...]}`` or a list
          of such objects

Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ClassTooSmall, EmptyEdgeSet, InconsistentCounts, ParseError
from .graph import DiGraph

log = logging.getLogger(__name__)

__all__ = [
    "Split",
    "Dataset",
    "SynthConfig",
    "load_dataset",
    "save_dataset",
    "read_edges",
    "read_features",
    "read_labels",
    "read_splits",
    "write_splits",
    "edge_homophily",
    "generate_synthetic",
    "make_splits",
    "load_geom_gcn",
]

DEFAULT_SPLIT_RATIOS = (0.48, 0.32, 0.20)


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def to_json(self):
        return {k: [int(i) for i in getattr(self, k)] for k in ("train", "val", "test")}

    def validate(self, n):
        parts = [set(self.train.tolist()), set(self.val.tolist()), set(self.test.tolist())]
        if parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2]:
            raise InconsistentCounts("split parts overlap")
        for p in parts:
            if p and (min(p) < 0 or max(p) >= n):
                raise InconsistentCounts(f"split index outside [0, {n})")


@dataclass(frozen=True)
class Dataset:
    graph: DiGraph
    labels: np.ndarray
    splits: list = field(default_factory=list)

    @property
    def features(self) -> Optional[np.ndarray]:
        return self.graph.features

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def read_edges(path):
    src, dst = [], []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 fields, got {len(parts)}")
        try:
            s, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, lineno, "edge endpoints must be integers") from None
        if s < 0 or d < 0:
            raise ParseError(path, lineno, "negative node index")
        src.append(s)
        dst.append(d)
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)


def read_features(path) -> np.ndarray:
    rows = []
    for lineno, line in _data_lines(path):
        try:
            rows.append([float(x) for x in line.split("\t")])
        except ValueError:
            raise ParseError(path, lineno, "non-numeric feature value") from None
        if rows and len(rows[-1]) != len(rows[0]):
            raise ParseError(path, lineno, f"expected {len(rows[0])} columns, got {len(rows[-1])}")
        if not np.all(np.isfinite(rows[-1])):
            raise ParseError(path, lineno, "feature values must be finite")
    return np.array(rows, dtype=np.float64)


def read_labels(path) -> np.ndarray:
    out = []
    for lineno, line in _data_lines(path):
        try:
            out.append(int(line))
        except ValueError:
            raise ParseError(path, lineno, "label must be an integer") from None
        if out[-1] < 0:
            raise ParseError(path, lineno, "label must be non-negative")
    return np.array(out, dtype=np.int64)


def read_splits(path) -> list:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, exc.msg) from None
    items = raw if isinstance(raw, list) else [raw]
    splits = []
    for item in items:
        try:
            splits.append(Split(*(np.array(item[k], dtype=np.int64) for k in ("train", "val", "test"))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(path, 1, f"malformed split object: {exc}") from None
    return splits


def write_splits(path, splits):
    Path(path).write_text(json.dumps([s.to_json() for s in splits]) + "\n", encoding="utf-8")


def load_dataset(edge_path, feature_path=None, label_path=None, split_path=None) -> Dataset:
    """Read a dataset; edge direction is kept exactly as listed.

    The node count comes from the labels (or features when labels are
    absent).  Duplicate edges are dropped with a logged warning.
    """
    src, dst = read_edges(edge_path)
    X = read_features(feature_path) if feature_path else None
    y = read_labels(label_path) if label_path else None
    if y is not None:
        n = y.size
    elif X is not None:
        n = X.shape[0]
    else:
        raise InconsistentCounts("node count needs labels or features")
    if X is not None and X.shape[0] != n:
        raise InconsistentCounts(f"{X.shape[0]} feature rows for {n} nodes")
    if src.size and max(src.max(), dst.max()) >= n:
        raise InconsistentCounts(f"edge references node {max(src.max(), dst.max())} but n={n}")
    graph = DiGraph.from_edges(n, src, dst, X)
    if graph.duplicate_edges:
        log.warning("dropped %d duplicate edges from %s", graph.duplicate_edges, edge_path)
    if graph.dropped_self_loops:
        log.warning("dropped %d self-loops from %s", graph.dropped_self_loops, edge_path)
    splits = read_splits(split_path) if split_path else []
    for s in splits:
        s.validate(n)
    labels = y if y is not None else np.zeros(n, dtype=np.int64)
    return Dataset(graph, labels, splits)


def _fmt(x):
    return repr(float(x))


def save_dataset(ds: Dataset, directory) -> dict:
    """Write the dataset files into ``directory`` and return their paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"edges": out / "edges.tsv", "labels": out / "labels.tsv"}
    src, dst = ds.graph.edge_list()
    paths["edges"].write_text("".join(f"{s}\t{d}\n" for s, d in zip(src, dst)), encoding="utf-8")
    paths["labels"].write_text("".join(f"{int(v)}\n" for v in ds.labels), encoding="utf-8")
    if ds.features is not None:
        paths["features"] = out / "features.tsv"
        paths["features"].write_text(
            "".join("\t".join(_fmt(x) for x in row) + "\n" for row in ds.features), encoding="utf-8"
        )
    if ds.splits:
        paths["splits"] = out / "splits.json"
        write_splits(paths["splits"], ds.splits)
    return {k: str(v) for k, v in paths.items()}


def edge_homophily(graph: DiGraph, labels) -> float:
    """Fraction of directed edges whose endpoints share a label."""
    src, dst = graph.edge_list()
    if src.size == 0:
        raise EmptyEdgeSet("edge homophily is undefined without edges")
    labels = np.asarray(labels)
    return float(np.mean(labels[src] == labels[dst]))


@dataclass(frozen=True)
class SynthConfig:
    """Planted-partition digraph with Gaussian class features.

    ``homophily`` is the probability that an edge stays inside its source's
    class; ``snr`` scales the class mean vectors against unit noise.
    """

    n: int = 1000
    classes: int = 5
    homophily: float = 0.1
    mean_degree: float = 5.0
    dim: int = 64
    snr: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2 or self.n < self.classes:
            raise ValueError("need at least two classes and n >= classes")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must lie in [0, 1]")
        if self.mean_degree <= 0 or self.dim < 1 or self.snr < 0:
            raise ValueError("mean degree and dim must be positive, snr non-negative")
        if self.homophily > 0 and self.n // self.classes < 2:
            raise ValueError("intra-class edges need at least two nodes per class")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Sample a directed planted-partition graph.

    Every node draws a Poisson out-degree.  Each out-edge stays in the
    source's class with probability ``homophily`` and otherwise goes to a
    uniformly chosen other class; the target is uniform within the chosen
    class.  Class ``c`` features are ``snr * e_{c mod dim}`` plus standard
    Gaussian noise.
    """
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n, cfg.classes
    labels = rng.permutation(np.arange(n) % m)
    members = [np.flatnonzero(labels == c) for c in range(m)]
    deg = rng.poisson(cfg.mean_degree, size=n)
    src = np.repeat(np.arange(n), deg)
    same = rng.random(src.size) < cfg.homophily
    shift = rng.integers(1, m, size=src.size)
    target_class = np.where(same, labels[src], (labels[src] + shift) % m)
    dst = np.empty_like(src)
    for c in range(m):
        sel = np.flatnonzero(target_class == c)
        dst[sel] = members[c][rng.integers(0, members[c].size, size=sel.size)]
    # redraw accidental self-loops inside the same class
    loops = np.flatnonzero(src == dst)
    while loops.size:
        cls = target_class[loops]
        for c in np.unique(cls):
            sel = loops[cls == c]
            dst[sel] = members[c][rng.integers(0, members[c].size, size=sel.size)]
        loops = loops[src[loops] == dst[loops]]
    means = np.zeros((m, cfg.dim))
    means[np.arange(m), np.arange(m) % cfg.dim] = cfg.snr
    X = means[labels] + rng.standard_normal((n, cfg.dim))
    graph = DiGraph.from_edges(n, src, dst, X)
    return Dataset(graph, labels.astype(np.int64), [])


def make_splits(labels, ratios=DEFAULT_SPLIT_RATIOS, n_splits: int = 10, seed: int = 0) -> list:
    """Per-class stratified train/val/test partitions.

    Each class of size ``c`` contributes ``round(r_train * c)`` training and
    ``round(r_val * c)`` validation nodes; the rest go to test.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError("ratios must be three non-negative numbers summing to 1")
    labels = np.asarray(labels)
    classes = np.unique(labels)
    sizes = {}
    for c in classes:
        count = int(np.sum(labels == c))
        n_train = int(round(ratios[0] * count))
        n_val = int(round(ratios[1] * count))
        n_test = count - n_train - n_val
        if min(n_train, n_val, n_test) < 1:
            raise ClassTooSmall(f"class {c} with {count} nodes cannot fill all three parts")
        sizes[c] = (n_train, n_val)
    rng = np.random.default_rng(seed)
    splits = []
    for _ in range(n_splits):
        parts = ([], [], [])
        for c in classes:
            idx = rng.permutation(np.flatnonzero(labels == c))
            n_train, n_val = sizes[c]
            parts[0].append(idx[:n_train])
            parts[1].append(idx[n_train:n_train + n_val])
            parts[2].append(idx[n_train + n_val:])
        splits.append(Split(*(np.sort(np.concatenate(p)) for p in parts)))
    return splits


def load_geom_gcn(directory) -> Dataset:
    """Read the raw WebKB/Wikipedia files distributed with Geom-GCN.

    Expects ``out1_graph_edges.txt`` and ``out1_node_feature_label.txt`` (tab
    separated, one header line each; features comma separated) and any
    ``*_split_0.6_0.2_<i>.npz`` split files present.
    """
    directory = Path(directory)
    ids, feats, labels = [], [], []
    with open(directory / "out1_node_feature_label.txt", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            node, feat, label = line.rstrip("\n").split("\t")
            ids.append(int(node))
            feats.append([float(x) for x in feat.split(",")])
            labels.append(int(label))
    order = np.argsort(ids)
    X = np.array(feats, dtype=np.float64)[order]
    y = np.array(labels, dtype=np.int64)[order]
    src, dst = [], []
    with open(directory / "out1_graph_edges.txt", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            s, d = line.split()
            src.append(int(s))
            dst.append(int(d))
    graph = DiGraph.from_edges(len(ids), src, dst, X)
    splits = []
    for path in sorted(directory.glob("*_split_0.6_0.2_*.npz")):
        with np.load(path) as z:
            splits.append(Split(*(np.flatnonzero(z[k]) for k in ("train_mask", "val_mask", "test_mask"))))
    return Dataset(graph, y, splits)
