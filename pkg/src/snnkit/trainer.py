"""Training drivers and trained-state persistence.

Two training modes: direct (one network, sequential stimuli) and parallel
training with diversity (many independent base networks, each on its own
disjoint data block with its own validated hyperparameter set, merged later
for evaluation).
"""

from __future__ import annotations

import json
import struct
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from . import plasticity
from .data import Dataset, take_subset
from .encoder import present_adaptive
from .errors import (ChecksumMismatch, InsufficientData, IoFailure,
                     NonFiniteState, PoolTooSmall, Truncated, VersionMismatch)
from .params import EncodingParams, HyperParams
from .topology import Network, NetworkSpec, build_network

STATE_MAGIC = b"SNNW"
STATE_VERSION = 1

HyperLike = Union[HyperParams, Sequence[HyperParams]]


@dataclass
class TrainConfig:
    n_train: int
    seed: int = 0
    epochs: int = 1
    layer_sizes: List[int] = field(default_factory=lambda: [10])
    hyper: Optional[HyperLike] = None
    workers: int = 1
    diversity_pool: Optional[List[HyperLike]] = None
    allow_overlap: bool = False
    encoding: EncodingParams = field(default_factory=EncodingParams)
    jobs: int = 1
    fast: bool = True


@dataclass
class TrainedState:
    spec: NetworkSpec
    weights: List[np.ndarray]   # per excitatory projection, (n_pre, n_post)
    delays: List[np.ndarray]    # ms, same shapes
    v_t: np.ndarray             # per hidden neuron, layer-major
    provenance: dict

    def __eq__(self, other) -> bool:
        return (self.spec.to_dict() == other.spec.to_dict()
                and len(self.weights) == len(other.weights)
                and all(np.array_equal(a, b)
                        for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b)
                        for a, b in zip(self.delays, other.delays))
                and np.array_equal(self.v_t, other.v_t)
                and self.provenance == other.provenance)


def _layer_hyper(hyper: Optional[HyperLike], layer_sizes: List[int]) -> List[HyperParams]:
    if hyper is None:
        hyper = HyperParams()
    if isinstance(hyper, HyperParams):
        return [hyper] * len(layer_sizes)
    if len(hyper) != len(layer_sizes):
        raise ValueError("need one HyperParams per layer")
    return list(hyper)


def snapshot(net: Network, provenance: dict) -> TrainedState:
    return TrainedState(
        spec=net.spec,
        weights=[pr.w.copy() for pr in net.projections],
        delays=[pr.delay.copy() for pr in net.projections],
        v_t=np.concatenate([pop.V_t for pop in net.populations]),
        provenance=dict(provenance))


def _stim_seed(base_seed: int, worker: int, stim: int) -> int:
    ss = np.random.SeedSequence((int(base_seed), int(worker), int(stim)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def train_direct(net: Network, ds: Dataset, cfg: TrainConfig,
                 worker_id: int = 0) -> TrainedState:
    """One pass (per epoch) over the dataset with supervision and plasticity
    on; incoming weights renormalized after every stimulus."""
    counter = 0
    for _epoch in range(cfg.epochs):
        for k in range(ds.count):
            img, label = ds.stimulus(k)
            try:
                present_adaptive(net, img, cfg.encoding, plasticity_on=True,
                                 seed=_stim_seed(cfg.seed, worker_id, counter),
                                 label=label, fast=cfg.fast)
            except NonFiniteState as e:
                raise NonFiniteState(f"{e} (stimulus {counter})",
                                     stimulus_index=counter) from e
            for pr in net.projections:
                if pr.plastic:
                    plasticity.normalize_incoming(pr)
            counter += 1
    return snapshot(net, {"seed": cfg.seed, "n_train": ds.count * cfg.epochs,
                          "worker": worker_id})


def _worker_block(ds: Dataset, cfg: TrainConfig, k: int) -> Dataset:
    if cfg.allow_overlap:
        # independent per-worker shuffle of the full order
        rng = np.random.default_rng(
            np.random.SeedSequence((int(cfg.seed), 0xA11, k)))
        order = ds.order.copy()
        rng.shuffle(order)
        block = Dataset(images=ds.images, labels=ds.labels,
                        order=order[:cfg.n_train].copy())
        return block
    return take_subset(ds, k * cfg.n_train, cfg.n_train)


def _run_worker(args) -> TrainedState:
    ds, cfg, k, hyper = args
    spec = NetworkSpec(layer_sizes=list(cfg.layer_sizes),
                       hyper=_layer_hyper(hyper, cfg.layer_sizes))
    net = build_network(spec, seed=cfg.seed + k)
    worker_cfg = TrainConfig(n_train=cfg.n_train, seed=cfg.seed + k,
                             epochs=cfg.epochs, layer_sizes=cfg.layer_sizes,
                             encoding=cfg.encoding, fast=cfg.fast)
    return train_direct(net, ds, worker_cfg, worker_id=k)


def train_parallel_diversity(ds: Dataset, cfg: TrainConfig) -> List[TrainedState]:
    """Train `workers` independent base networks on disjoint data blocks
    (unless allow_overlap), each with its own hyperparameter set.  Output is
    ordered by worker id regardless of scheduling."""
    if cfg.workers < 1:
        raise ValueError("workers must be >= 1")
    pool = cfg.diversity_pool
    if pool is None:
        pool = [cfg.hyper if cfg.hyper is not None else HyperParams()] * cfg.workers
    if len(pool) < cfg.workers:
        raise PoolTooSmall(
            f"diversity pool has {len(pool)} entries for {cfg.workers} workers")
    if not cfg.allow_overlap and cfg.workers * cfg.n_train > ds.count:
        raise InsufficientData(
            f"{cfg.workers} x {cfg.n_train} disjoint stimuli exceed dataset "
            f"of {ds.count}; pass allow_overlap to sample with replacement")
    if cfg.allow_overlap and cfg.n_train > ds.count:
        raise InsufficientData("n_train exceeds dataset size")
    jobs = [(_worker_block(ds, cfg, k), cfg, k, pool[k])
            for k in range(cfg.workers)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            return list(ex.map(_run_worker, jobs))
    return [_run_worker(j) for j in jobs]


# -- trained-state file format (.snnw) -----------------------------------
#
#   "SNNW" | u32le version | u32le header_len | header JSON (utf-8)
#   | arrays as little-endian float64 in manifest order | u32le crc32
#
# Manifest order: per-projection weights (row-major), then per-projection
# delays, then V_t.  Projection order: for each layer k, input->k then j->k
# for j < k.


def state_to_bytes(st: TrainedState) -> bytes:
    arrays = ([("w", w) for w in st.weights]
              + [("delay", d) for d in st.delays]
              + [("v_t", st.v_t)])
    header = {
        "spec": st.spec.to_dict(),
        "provenance": st.provenance,
        "arrays": [{"name": f"{nm}{i}", "shape": list(a.shape)}
                   for i, (nm, a) in enumerate(arrays)],
    }
    hj = json.dumps(header, sort_keys=True).encode("utf-8")
    out = bytearray()
    out += STATE_MAGIC
    out += struct.pack("<I", STATE_VERSION)
    out += struct.pack("<I", len(hj))
    out += hj
    for _, a in arrays:
        out += np.ascontiguousarray(a, dtype="<f8").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def state_from_bytes(raw: bytes) -> TrainedState:
    if len(raw) < 16:
        raise Truncated("state file shorter than fixed header")
    if raw[:4] != STATE_MAGIC:
        raise IoFailure("not a trained-state file (bad magic)")
    version = struct.unpack_from("<I", raw, 4)[0]
    if version != STATE_VERSION:
        raise VersionMismatch(f"state version {version}, reader supports {STATE_VERSION}")
    crc_stored = struct.unpack_from("<I", raw, len(raw) - 4)[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != crc_stored:
        raise ChecksumMismatch("state file CRC mismatch")
    hlen = struct.unpack_from("<I", raw, 8)[0]
    header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    spec = NetworkSpec.from_dict(header["spec"])
    off = 12 + hlen
    arrays = []
    for meta in header["arrays"]:
        n = int(np.prod(meta["shape"])) if meta["shape"] else 1
        a = np.frombuffer(raw, dtype="<f8", count=n, offset=off)
        arrays.append(a.astype(np.float64).reshape(meta["shape"]))
        off += n * 8
    n_proj = (len(arrays) - 1) // 2
    return TrainedState(spec=spec,
                        weights=arrays[:n_proj],
                        delays=arrays[n_proj:2 * n_proj],
                        v_t=arrays[-1],
                        provenance=header["provenance"])


def save_state(st: TrainedState, path: str) -> None:
    try:
        with open(path, "wb") as f:
            f.write(state_to_bytes(st))
    except OSError as e:
        raise IoFailure(str(e)) from e


def load_state(path: str) -> TrainedState:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise IoFailure(str(e)) from e
    return state_from_bytes(raw)
