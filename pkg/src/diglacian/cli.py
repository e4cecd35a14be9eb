"""Command-line entry point: ``diglacian {preprocess,train,verify,synth}``.

Exit codes: 0 success, 1 failed verification, 2 unreadable input or invalid
flags, 3 violated precondition (odd k, degenerate features, ...), 4 missing
preprocessing artifacts.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from contextlib import nullcontext
from importlib import resources
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__
from .container import read_sparse, write_dense, write_sparse, write_vector
from .data import SynthConfig, edge_homophily, generate_synthetic, load_dataset, make_splits, save_dataset
from .errors import DiglacianError, InconsistentCounts, ParseError
from .models import MODEL_KINDS, PropagationSet, adasage_operators, gcn_normalized
from .pipeline import preprocess
from .train import TrainConfig, evaluate, train

log = logging.getLogger("diglacian")

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_PRECONDITION, EXIT_MISSING = 0, 1, 2, 3, 4
MANIFEST = "manifest.json"


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def load_schema(name):
    """Shipped JSON schema, ``name`` being ``metrics`` or ``report``."""
    return json.loads(resources.files(__package__).joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8"))


def _versions():
    return {
        "diglacian": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _load_input(args):
    try:
        return load_dataset(args.edges, args.features, args.labels, args.splits)
    except (ParseError, InconsistentCounts) as exc:
        raise CommandError(EXIT_PARSE, str(exc)) from exc
    except (OSError, ValueError) as exc:
        raise CommandError(EXIT_PARSE, f"cannot read dataset: {exc}") from exc


# -- preprocess ---------------------------------------------------------------

def cmd_preprocess(args):
    if args.k < 2 or args.k % 2:
        raise CommandError(EXIT_PRECONDITION, f"--k must be an even integer >= 2, got {args.k}")
    if not 0.0 <= args.mu < 1.0:
        raise CommandError(EXIT_PRECONDITION, f"--mu must lie in [0, 1), got {args.mu}")
    ds = _load_input(args)
    if ds.features is None:
        raise CommandError(EXIT_PRECONDITION, "feature-aware augmentation needs --features")
    splits = ds.splits
    if not splits and args.labels:
        try:
            splits = make_splits(ds.labels, n_splits=args.num_splits, seed=args.seed)
        except ValueError as exc:
            raise CommandError(EXIT_PRECONDITION, str(exc)) from exc
    try:
        pre = preprocess(ds.graph, args.k, args.seed, commute=args.commute, mu=args.mu)
    except (DiglacianError, ValueError) as exc:
        raise CommandError(EXIT_PRECONDITION, f"{type(exc).__name__}: {exc}") from exc

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = type(ds)(ds.graph, ds.labels, splits)
    files = {f"dataset/{Path(p).name}": p for p in save_dataset(ds, out / "dataset").values()}

    def sparse(name, M):
        write_sparse(out / name, M)
        files[name] = out / name

    comb = pre.combinatorial
    sparse("combinatorial.tsv", comb.adjacency)
    sparse("sorting_graph.tsv", comb.sorting_adjacency)
    sparse("transition.tsv", pre.chain.transition)
    sparse("propagation.tsv", pre.propagation)
    sparse("undirected_propagation.tsv", pre.undirected)
    write_vector(out / "stationary.tsv", pre.chain.pi)
    files["stationary.tsv"] = out / "stationary.tsv"
    if pre.commute is not None:
        cm = pre.commute
        for name, arr in (("fundamental.dgl", cm.fundamental), ("hitting.dgl", cm.hitting), ("commute.dgl", cm.commute)):
            write_dense(out / name, arr)
            files[name] = out / name
        sparse("commute_propagation.tsv", cm.propagation)

    manifest = {
        "command": "preprocess",
        "flags": {
            "edges": str(args.edges),
            "features": str(args.features),
            "labels": None if args.labels is None else str(args.labels),
            "splits": None if args.splits is None else str(args.splits),
            "k": args.k,
            "seed": args.seed,
            "commute": bool(args.commute),
            "mu": args.mu,
            "num_splits": args.num_splits,
        },
        "k": args.k,
        "seed": args.seed,
        "window_size": comb.window_size,
        "n": ds.n,
        "num_edges": ds.graph.num_edges,
        "num_splits": len(splits),
        "nnz_transition": int(pre.chain.transition.nnz),
        "stationary": {"iterations": pre.chain.iterations, "residual": pre.chain.residual},
        "versions": _versions(),
        "files": {name: _sha256(path) for name, path in sorted(files.items())},
    }
    _dump_json(manifest, out / MANIFEST)
    log.info("wrote %d artifacts to %s (residual %.2e)", len(files), out, pre.chain.residual)
    return EXIT_OK


# -- train --------------------------------------------------------------------

def _load_artifacts(directory):
    directory = Path(directory)
    manifest_path = directory / MANIFEST
    if not manifest_path.is_file():
        raise CommandError(EXIT_MISSING, f"no {MANIFEST} in {directory}; run preprocess first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    data = directory / "dataset"
    paths = {name: data / f"{name}.tsv" for name in ("edges", "features", "labels")}
    split_path = data / "splits.json"
    for p in list(paths.values()) + [split_path]:
        if not p.is_file():
            raise CommandError(EXIT_MISSING, f"missing artifact {p}")
    ds = load_dataset(paths["edges"], paths["features"], paths["labels"], split_path)
    return manifest, ds


def _read_operator(directory, name):
    path = Path(directory) / name
    if not path.is_file():
        raise CommandError(EXIT_MISSING, f"missing artifact {path}")
    return read_sparse(path)


def _propagation(kind, directory, ds, pre=None):
    if kind == "mlp":
        return PropagationSet()
    if kind == "gcn":
        return PropagationSet(undirected=gcn_normalized(ds.graph.adjacency))
    if kind == "adasage":
        return adasage_operators(ds.graph.adjacency)
    if pre is not None:
        directed = pre.propagation if kind == "diglacian" else pre.commute.propagation
        return PropagationSet(pre.undirected, directed)
    directed = "propagation.tsv" if kind == "diglacian" else "commute_propagation.tsv"
    return PropagationSet(_read_operator(directory, "undirected_propagation.tsv"), _read_operator(directory, directed))


def _run_splits(kind, ds, props, config, indices):
    runs = []
    for i in indices:
        split = ds.splits[i]
        train_mask = np.zeros(ds.n, dtype=bool)
        val_mask = np.zeros(ds.n, dtype=bool)
        test_mask = np.zeros(ds.n, dtype=bool)
        train_mask[split.train] = True
        val_mask[split.val] = True
        test_mask[split.test] = True
        cfg = TrainConfig(**{**config.__dict__, "seed": config.seed + i})
        res = train(kind, ds.features, props, ds.labels, train_mask, val_mask, cfg)
        runs.append({
            "split": i,
            "test_accuracy": evaluate(kind, ds.features, props, res.params, ds.labels, test_mask),
            "val_accuracy": res.best_val_accuracy,
            "best_epoch": res.best_epoch,
            "epochs_run": res.epochs_run,
            "alpha": [float(a) for a in res.history["alpha"]],
            "beta": [float(b) for b in res.history["beta"]],
        })
    return runs


def _summary(runs):
    acc = np.array([r["test_accuracy"] for r in runs])
    return float(acc.mean()), float(acc.std())


def cmd_train(args):
    manifest, ds = _load_artifacts(args.artifacts)
    if ds.features is None:
        raise CommandError(EXIT_MISSING, "artifact dataset has no features")
    try:
        config = TrainConfig(
            hidden=args.hidden, lr=args.lr, weight_decay=args.weight_decay, dropout=args.dropout,
            patience=args.patience, max_epochs=args.max_epochs, layers=args.layers, seed=args.seed,
        )
    except ValueError as exc:
        raise CommandError(EXIT_PARSE, str(exc)) from exc
    if not ds.splits:
        raise CommandError(EXIT_MISSING, "artifacts contain no splits")
    if args.split_index is not None:
        if not 0 <= args.split_index < len(ds.splits):
            raise CommandError(EXIT_PARSE, f"--split-index must lie in [0, {len(ds.splits)})")
        indices = [args.split_index]
    else:
        indices = list(range(len(ds.splits)))

    t0 = time.perf_counter()
    props = _propagation(args.model, args.artifacts, ds)
    runs = _run_splits(args.model, ds, props, config, indices)
    mean, std = _summary(runs)
    metrics = {
        "model": args.model,
        "config": dict(config.__dict__),
        "artifacts": {"k": manifest.get("k"), "seed": manifest.get("seed")},
        "splits": runs,
        "test_accuracy_mean": mean,
        "test_accuracy_std": std,
        "wall_time_seconds": time.perf_counter() - t0,
        "versions": _versions(),
    }
    if args.sweep_k:
        metrics["sweep"] = _sweep(args, manifest, ds, config, indices)
    _dump_json(metrics, args.out)
    log.info("%s: test accuracy %.4f +- %.4f over %d splits", args.model, mean, std, len(runs))
    return EXIT_OK


def _sweep(args, manifest, ds, config, indices):
    try:
        ks = [int(x) for x in args.sweep_k.split(",") if x.strip()]
    except ValueError as exc:
        raise CommandError(EXIT_PARSE, f"bad --sweep-k list: {args.sweep_k}") from exc
    if any(k < 2 or k % 2 for k in ks):
        raise CommandError(EXIT_PRECONDITION, "--sweep-k values must be even integers >= 2")
    flags = manifest.get("flags", {})
    rows = []
    for k in ks:
        pre = preprocess(ds.graph, k, manifest.get("seed", 0),
                         commute=args.model == "diglacian-ct", mu=flags.get("mu", 0.97))
        runs = _run_splits(args.model, ds, _propagation(args.model, None, ds, pre), config, indices)
        mean, std = _summary(runs)
        rows.append({"k": k, "mean": mean, "std": std, "splits": len(runs)})
    if args.sweep_out:
        with open(args.sweep_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["k", "mean", "std", "splits"])
            writer.writeheader()
            writer.writerows(rows)
    return rows


# -- verify -------------------------------------------------------------------

def cmd_verify(args):
    from .verify import run_suite

    report = run_suite(inject_fault=args.inject_fault, progress=lambda s: print(s, file=sys.stderr))
    _dump_json(report, args.report)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


# -- synth --------------------------------------------------------------------

def cmd_synth(args):
    try:
        cfg = SynthConfig(n=args.n, classes=args.classes, homophily=args.homophily,
                          mean_degree=args.mean_degree, dim=args.dim, snr=args.snr, seed=args.seed)
        ds = generate_synthetic(cfg)
        splits = make_splits(ds.labels, n_splits=args.num_splits, seed=args.seed) if args.num_splits else []
    except ValueError as exc:
        raise CommandError(EXIT_PARSE, str(exc)) from exc
    ds = type(ds)(ds.graph, ds.labels, splits)
    out = Path(args.out_dir)
    files = save_dataset(ds, out)
    manifest = {
        "command": "synth",
        "flags": dict(cfg.__dict__, num_splits=args.num_splits),
        "n": ds.n,
        "num_edges": ds.graph.num_edges,
        "duplicate_edges": ds.graph.duplicate_edges,
        "measured_homophily": edge_homophily(ds.graph, ds.labels),
        "versions": _versions(),
        "files": {Path(p).name: _sha256(p) for p in sorted(files.values())},
    }
    _dump_json(manifest, out / MANIFEST)
    log.info("measured edge homophily %.4f", manifest["measured_homophily"])
    return EXIT_OK


# -- parser -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="diglacian", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--deterministic", action="store_true", help="force single-threaded numeric kernels")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pp = sub.add_parser("preprocess", help="build the augmented chain and its operators")
    pp.add_argument("--edges", required=True)
    pp.add_argument("--features", required=True)
    pp.add_argument("--labels")
    pp.add_argument("--splits")
    pp.add_argument("--num-splits", type=int, default=10, help="splits to generate when --splits is absent")
    pp.add_argument("--k", type=int, default=2, help="even sorting-graph degree")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--commute", action="store_true", help="also compute commute-time operators")
    pp.add_argument("--mu", type=float, default=0.97, help="commute sparsification ratio")
    pp.add_argument("--out-dir", required=True)
    pp.set_defaults(func=cmd_preprocess)

    pt = sub.add_parser("train", help="train a model on preprocessed artifacts")
    pt.add_argument("--artifacts", required=True)
    pt.add_argument("--model", choices=MODEL_KINDS, default="diglacian")
    pt.add_argument("--lr", type=float, default=0.01)
    pt.add_argument("--weight-decay", type=float, default=5e-4)
    pt.add_argument("--hidden", type=int, default=64)
    pt.add_argument("--dropout", type=float, default=0.5)
    pt.add_argument("--patience", type=int, default=500)
    pt.add_argument("--max-epochs", type=int, default=1000)
    pt.add_argument("--layers", type=int, default=2)
    pt.add_argument("--split-index", type=int)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--sweep-k", help="comma separated k values, e.g. 2,4,6")
    pt.add_argument("--sweep-out", help="CSV path for the k sweep")
    pt.add_argument("--out", help="metrics JSON path (stdout when omitted)")
    pt.set_defaults(func=cmd_train)

    pv = sub.add_parser("verify", help="run the oracle cross-check suite")
    pv.add_argument("--report", help="report JSON path (stdout when omitted)")
    pv.add_argument("--inject-fault", choices=("stationary",), help=argparse.SUPPRESS)
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("synth", help="generate a synthetic directed planted-partition dataset")
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--classes", type=int, default=5)
    ps.add_argument("--homophily", type=float, default=0.1)
    ps.add_argument("--mean-degree", type=float, default=5.0)
    ps.add_argument("--dim", type=int, default=64)
    ps.add_argument("--snr", type=float, default=1.0)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--num-splits", type=int, default=10)
    ps.add_argument("--out-dir", required=True)
    ps.set_defaults(func=cmd_synth)
    return p


def _thread_limit(deterministic):
    if deterministic:
        return threadpool_limits(limits=1)
    env = os.environ.get("DGL_THREADS")
    if env:
        try:
            return threadpool_limits(limits=max(1, int(env)))
        except ValueError:
            log.warning("ignoring non-integer DGL_THREADS=%r", env)
    return nullcontext()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.deterministic):
            return args.func(args)
    except CommandError as exc:
        print(f"diglacian: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
