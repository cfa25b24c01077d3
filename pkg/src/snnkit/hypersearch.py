"""Random hyperparameter search over the documented tuning ranges.

Each trial trains a fresh base network for one epoch on the training subset
and scores it on the validation subset.  Records are ranked by validation
accuracy (ties: lower ambiguity, then lower seed).  The top of the ranking
feeds the diversity pool for parallel training.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields as dc_fields
from typing import Dict, List, Optional, Tuple

import numpy as np

from .data import Dataset
from .errors import BadRange, SnnError
from .evaluator import evaluate
from .params import EncodingParams, HyperParams
from .topology import EVAL, NetworkSpec, build_network, set_phase
from .trainer import TrainConfig, train_direct

# (low, high, sampling).  Log-uniform where the range spans decades.
BASE_RANGES: Dict[str, Tuple[float, float, str]] = {
    "tau_adpt": (10.0, 1e8, "log"),
    "dv_t": (1e-3, 1e-1, "log"),
    "tau_m": (10.0, 200.0, "lin"),
    "tau_ge": (1.0, 10.0, "lin"),
    "tau_gi": (1.0, 10.0, "lin"),
    "w_ie_max": (0.1, 100.0, "lin"),
    "lambda_ie": (1e-3, 0.5, "log"),
    "dw_inhib": (1e-2, 100.0, "log"),
    "max_delay_ie": (0.0, 200.0, "lin"),
    "a2_minus": (1e-5, 1e-2, "log"),
    "v_tscale": (1e-3, 1.0, "log"),
    "v_tshift": (0.0, 1.0, "lin"),
    "w_scale": (1e-3, 1.0, "log"),
    "w_shift": (0.0, 1.0, "lin"),
}

# Parameters retuned when adding a hidden layer; everything else is drawn
# from previously validated base configurations.
MULTILAYER_RANGES: Dict[str, Tuple[float, float, str]] = {
    "w_ee_max": (1.0, 100.0, "lin"),
    "lambda_ee": (0.1, 0.5, "lin"),
    "max_delay_ee": (0.0, 200.0, "lin"),
}


@dataclass
class SearchRecord:
    config: HyperParams
    seed: int
    val_accuracy: float
    val_ambiguity: float
    rank: int = -1
    failure: Optional[str] = None

    def sort_key(self):
        failed = 1 if self.failure is not None else 0
        return (failed, -self.val_accuracy, self.val_ambiguity, self.seed)


def sample_value(lo: float, hi: float, mode: str, rng: np.random.Generator) -> float:
    if lo > hi:
        raise BadRange(f"range [{lo}, {hi}] is inverted")
    if lo == hi:
        return lo
    if mode == "log":
        if lo <= 0:
            raise BadRange("log-uniform range needs a positive lower bound")
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    return float(rng.uniform(lo, hi))


def sample_config(ranges: Dict[str, Tuple[float, float, str]], seed,
                  base: Optional[HyperParams] = None) -> HyperParams:
    """Draw one configuration; fields absent from `ranges` keep the values
    of `base` (defaults if not given)."""
    rng = np.random.default_rng(seed)
    h = base if base is not None else HyperParams()
    draws = {name: sample_value(lo, hi, mode, rng)
             for name, (lo, hi, mode) in sorted(ranges.items())}
    return h.replaced(**draws)


def rank_records(records: List[SearchRecord]) -> List[SearchRecord]:
    ranked = sorted(records, key=SearchRecord.sort_key)
    for i, r in enumerate(ranked):
        r.rank = i
    return ranked


def random_search(train_ds: Dataset, val_ds: Dataset, budget: int, seed: int,
                  encoding: Optional[EncodingParams] = None,
                  layer_sizes: Optional[List[int]] = None,
                  base_records: Optional[List[SearchRecord]] = None,
                  fast: bool = True) -> List[SearchRecord]:
    """Run `budget` independent trials and return ranked records.  Failed
    trials (numeric blowups) are kept, tagged and ranked last.

    For multi-layer searches pass `base_records`: each trial then reuses a
    validated base configuration and only retunes the layer-to-layer
    parameters."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    encoding = encoding or EncodingParams()
    layer_sizes = layer_sizes or [10]
    records = []
    for trial in range(budget):
        ss = np.random.SeedSequence((int(seed), 0x5EA, trial))
        trial_seed = int(ss.generate_state(1, dtype=np.uint64)[0]) % (2 ** 31)
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xB0, trial)))
        if base_records:
            donor = base_records[rng.integers(len(base_records))]
            config = sample_config(MULTILAYER_RANGES,
                                   np.random.SeedSequence((int(seed), 0xC0, trial)),
                                   base=donor.config)
        else:
            config = sample_config(BASE_RANGES,
                                   np.random.SeedSequence((int(seed), 0xC0, trial)))
        rec = SearchRecord(config=config, seed=trial_seed,
                           val_accuracy=0.0, val_ambiguity=1.0)
        try:
            spec = NetworkSpec(layer_sizes=list(layer_sizes),
                               hyper=[config] * len(layer_sizes))
            net = build_network(spec, seed=trial_seed)
            cfg = TrainConfig(n_train=train_ds.count, seed=trial_seed,
                              encoding=encoding, fast=fast)
            train_direct(net, train_ds, cfg)
            set_phase(net, EVAL)
            m = evaluate(net, val_ds, encoding, seed=trial_seed, fast=fast)
            rec.val_accuracy = m.overall_accuracy
            rec.val_ambiguity = m.accuracy_with_ambiguity
        except SnnError as e:
            rec.failure = f"{type(e).__name__}: {e}"
        records.append(rec)
    return rank_records(records)


HYPER_FIELDS = [f.name for f in dc_fields(HyperParams)]
RANKED_COLUMNS = ["rank", "seed", "val_acc", "val_ambig", "failure"] + HYPER_FIELDS


def write_ranked_csv(records: List[SearchRecord], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RANKED_COLUMNS)
        for r in records:
            row = [r.rank, r.seed, f"{r.val_accuracy:.6f}",
                   f"{r.val_ambiguity:.6f}", r.failure or ""]
            row += [repr(getattr(r.config, name)) for name in HYPER_FIELDS]
            w.writerow(row)


def read_ranked_csv(path: str) -> List[SearchRecord]:
    records = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            config = HyperParams(**{name: float(row[name]) for name in HYPER_FIELDS})
            records.append(SearchRecord(
                config=config, seed=int(row["seed"]),
                val_accuracy=float(row["val_acc"]),
                val_ambiguity=float(row["val_ambig"]),
                rank=int(row["rank"]),
                failure=row["failure"] or None))
    return records


def diversity_pool(records: List[SearchRecord], n: int) -> List[HyperParams]:
    """Top-n validated configurations, best first."""
    good = [r for r in rank_records(list(records)) if r.failure is None]
    return [r.config for r in good[:n]]
