"""Command-line entry point: train, eval, search, report.

Every command writes a `manifest.json` next to its outputs with all resolved
settings and seeds; rerunning a command from its manifest reproduces the
output files bit-identically (the manifest's wall-clock fields aside).
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version as pkg_version

import numpy as np

from . import evaluator, hypersearch, trainer
from .data import load_mnist, take_subset
from .errors import DataError, IoFailure, NonFiniteState, SnnError
from .params import BASE_HYPER, EncodingParams, HyperParams
from .topology import EVAL, NetworkSpec, build_network, merge_base_networks, set_phase

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _toolkit_version() -> str:
    try:
        return pkg_version("snnkit")
    except PackageNotFoundError:
        return "unknown"


def _load_config(path):
    if path is None:
        return {}
    with open(path) as f:
        return json.load(f)


def _resolve_hyper(config: dict):
    layer_sizes = config.get("layer_sizes", [10])
    raw = config.get("hyper", {})
    if isinstance(raw, dict):
        hyper = [BASE_HYPER.replaced(**raw)] * len(layer_sizes)
    else:
        hyper = [BASE_HYPER.replaced(**h) for h in raw]
        if len(hyper) != len(layer_sizes):
            raise DataError("config: need one hyper entry per layer")
    return layer_sizes, hyper


def _resolve_encoding(config: dict) -> EncodingParams:
    return EncodingParams(**config.get("encoding", {}))


def _data_dir(args) -> str:
    d = args.data_dir or os.environ.get("SNN_DATA_DIR")
    if not d:
        raise DataError("no data directory: pass --data-dir or set SNN_DATA_DIR")
    return d


def _write_manifest(out_dir: str, command: str, resolved: dict,
                    inputs: dict, outputs, t0: float) -> None:
    manifest = {
        "command": command,
        "resolved": resolved,
        "inputs": inputs,
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "toolkit_version": _toolkit_version(),
        "wall_clock_s": round(time.time() - t0, 3),
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_train(args) -> int:
    t0 = time.time()
    config = _load_config(args.config)
    layer_sizes, hyper = _resolve_hyper(config)
    encoding = _resolve_encoding(config)
    data_dir = _data_dir(args)
    ds = load_mnist(data_dir, "train")
    shuffle_seed = args.shuffle_seed if args.shuffle_seed is not None else args.seed
    ds = take_subset(ds, 0, ds.count, shuffle_seed=shuffle_seed)

    pool = None
    if args.pool:
        records = hypersearch.read_ranked_csv(args.pool)
        pool = hypersearch.diversity_pool(records, args.workers)

    cfg = trainer.TrainConfig(
        n_train=args.n_train, seed=args.seed, epochs=args.epochs,
        layer_sizes=layer_sizes, hyper=hyper, workers=args.workers,
        diversity_pool=pool, allow_overlap=args.allow_overlap,
        encoding=encoding, jobs=args.jobs)

    os.makedirs(args.out, exist_ok=True)
    states = trainer.train_parallel_diversity(ds, cfg)
    outputs = []
    for k, st in enumerate(states):
        path = os.path.join(args.out, f"state_worker{k:03d}.snnw")
        trainer.save_state(st, path)
        outputs.append(path)

    resolved = {
        "layer_sizes": layer_sizes,
        "hyper": [h.to_dict() for h in hyper],
        "encoding": encoding.to_dict(),
        "n_train": args.n_train, "epochs": args.epochs,
        "workers": args.workers, "seed": args.seed,
        "shuffle_seed": shuffle_seed, "allow_overlap": args.allow_overlap,
        "pool": args.pool,
    }
    _write_manifest(args.out, "train", resolved,
                    {"data_dir": data_dir}, outputs, t0)
    return EXIT_OK


def cmd_eval(args) -> int:
    t0 = time.time()
    config = _load_config(args.config)
    encoding = _resolve_encoding(config)
    data_dir = _data_dir(args)
    paths = sorted(glob.glob(os.path.join(args.models, "*.snnw")))
    if not paths:
        raise DataError(f"no .snnw state files in {args.models}")
    states = [trainer.load_state(p) for p in paths]
    net = merge_base_networks(states)
    set_phase(net, EVAL)

    ds = load_mnist(data_dir, "test")
    ds = take_subset(ds, 0, min(args.n_test, ds.count))
    metrics = evaluator.evaluate(net, ds, encoding, seed=args.seed)

    n_train = states[0].provenance.get("n_train", 0)
    row = evaluator.metrics_row(
        metrics, config_id=os.path.basename(os.path.normpath(args.models)),
        n_train_per_worker=n_train, workers=len(states),
        layer_sizes=[sum(p.n for p in net.populations
                         if p.layer == layer) for layer in range(net.n_layers)])
    os.makedirs(args.out, exist_ok=True)
    outputs = evaluator.report([row], [metrics.misprediction_matrix], args.out)
    resolved = {"models": paths, "n_test": ds.count, "seed": args.seed,
                "encoding": encoding.to_dict()}
    _write_manifest(args.out, "eval", resolved,
                    {"data_dir": data_dir, "models": args.models}, outputs, t0)
    return EXIT_OK


def cmd_search(args) -> int:
    t0 = time.time()
    config = _load_config(args.config)
    encoding = _resolve_encoding(config)
    data_dir = _data_dir(args)
    if args.budget < 1:
        raise UsageError("--budget must be >= 1")
    train_full = load_mnist(data_dir, "train")
    train_full = take_subset(train_full, 0, train_full.count,
                             shuffle_seed=args.seed)
    n_train = min(args.n_train, train_full.count - min(args.n_val, train_full.count // 2))
    train_ds = take_subset(train_full, 0, n_train)
    val_ds = take_subset(train_full, n_train,
                         min(args.n_val, train_full.count - n_train))
    records = hypersearch.random_search(train_ds, val_ds, args.budget,
                                        args.seed, encoding=encoding)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "ranked.csv")
    hypersearch.write_ranked_csv(records, out_csv)
    resolved = {"budget": args.budget, "n_train": n_train,
                "n_val": val_ds.count, "seed": args.seed,
                "encoding": encoding.to_dict()}
    _write_manifest(args.out, "search", resolved,
                    {"data_dir": data_dir}, [out_csv], t0)
    return EXIT_OK


def cmd_report(args) -> int:
    t0 = time.time()
    import csv as _csv

    rows = []
    for path in args.metrics:
        with open(path, newline="") as f:
            rows.extend(_csv.DictReader(f))
    matrices = []
    if args.matrix:
        mat = np.zeros((10, 10))
        with open(args.matrix, newline="") as f:
            for r, row in enumerate(_csv.DictReader(f)):
                for c in range(10):
                    mat[r % 10, c] = float(row[f"pred_{c}"])
        matrices.append(mat)
    os.makedirs(args.out, exist_ok=True)
    outputs = evaluator.report(rows, matrices, args.out)
    _write_manifest(args.out, "report",
                    {"metrics": args.metrics, "matrix": args.matrix},
                    {}, outputs, t0)
    return EXIT_OK


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="snn",
        description="Supervised-STDP spiking network toolkit")
    p.add_argument("--data-dir", default=None,
                   help="directory with the four IDX files (or SNN_DATA_DIR)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int,
                        default=int(os.environ.get("SNN_SEED", "0")))
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("train", help="train one network or many base networks")
    common(sp)
    sp.add_argument("--n-train", type=int, required=True,
                    help="training stimuli per worker")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--epochs", type=int, default=1)
    sp.add_argument("--pool", default=None,
                    help="ranked.csv with validated configs (diversity pool)")
    sp.add_argument("--allow-overlap", action="store_true",
                    help="sample worker blocks with replacement")
    sp.add_argument("--shuffle-seed", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1,
                    help="worker processes to run concurrently")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="merge trained states and evaluate")
    common(sp)
    sp.add_argument("--models", required=True, help="directory of .snnw files")
    sp.add_argument("--n-test", type=int, default=10000)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("search", help="random hyperparameter search")
    common(sp)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--n-train", type=int, default=10000)
    sp.add_argument("--n-val", type=int, default=1000)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("report", help="render charts from metrics CSVs")
    common(sp)
    sp.add_argument("--metrics", nargs="+", required=True,
                    help="metrics.csv files")
    sp.add_argument("--matrix", default=None, help="mispred_matrix.csv")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteState as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, IoFailure, SnnError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
