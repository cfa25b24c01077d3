"""Prediction from group spike counts, accuracy with ambiguity, reports."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .data import Dataset
from .encoder import present_adaptive
from .errors import IoFailure
from .params import EncodingParams
from .topology import EVAL, Network
from . import report as report_mod


@dataclass
class Prediction:
    group_counts: np.ndarray       # 10 ints, summed over the last hidden layer
    argmax_set: frozenset          # groups attaining the maximum count
    ambiguous: bool                # tie between >= 2 groups
    correct: bool                  # true label in argmax_set
    correct_with_ambiguity: bool   # correct and ambiguous
    label: int
    final_scale: float = 0.25


@dataclass
class Metrics:
    n: int
    overall_accuracy: float
    accuracy_with_ambiguity: float
    per_label_accuracy: np.ndarray        # 10
    per_label_ambiguity: np.ndarray       # 10
    per_label_n: np.ndarray               # 10
    misprediction_matrix: np.ndarray      # 10x10, zero diagonal
    overall_error: float                  # binomial
    ambiguity_error: float

    @staticmethod
    def binomial_error(p: float, n: int) -> float:
        return float(np.sqrt(p * (1.0 - p) / n)) if n > 0 else 0.0


def classify_counts(counts: np.ndarray, label: int) -> Prediction:
    """Tie-aware argmax classification.  An all-zero response is a 10-way tie."""
    counts = np.asarray(counts)
    top = counts.max()
    argmax_set = frozenset(int(g) for g in np.nonzero(counts == top)[0])
    ambiguous = len(argmax_set) >= 2
    correct = label in argmax_set
    return Prediction(group_counts=counts.copy(), argmax_set=argmax_set,
                      ambiguous=ambiguous, correct=correct,
                      correct_with_ambiguity=correct and ambiguous,
                      label=label)


def predict(net: Network, img: np.ndarray, ep: EncodingParams, seed,
            label: int = -1, fast: bool = True) -> Prediction:
    """Present one stimulus with plasticity off and classify by the digit
    group with the highest spike count in the last hidden layer."""
    if net.phase != EVAL:
        raise ValueError("network must be in the Eval phase for prediction")
    _, scale = present_adaptive(net, img, ep, plasticity_on=False,
                                seed=seed, fast=fast)
    pred = classify_counts(net.group_counts_last_layer(), label)
    pred.final_scale = scale
    return pred


def aggregate(preds: List[Prediction]) -> Metrics:
    n = len(preds)
    n_correct = sum(p.correct for p in preds)
    n_ambig_correct = sum(p.correct_with_ambiguity for p in preds)
    per_n = np.zeros(10, dtype=np.int64)
    per_correct = np.zeros(10, dtype=np.int64)
    per_ambig = np.zeros(10, dtype=np.int64)
    mat = np.zeros((10, 10))
    for p in preds:
        per_n[p.label] += 1
        if p.correct:
            per_correct[p.label] += 1
            if p.correct_with_ambiguity:
                per_ambig[p.label] += 1
        else:
            # fractional attribution across the (wrong) tied groups
            share = 1.0 / len(p.argmax_set)
            for g in p.argmax_set:
                mat[p.label, g] += share
    with np.errstate(invalid="ignore", divide="ignore"):
        acc_l = np.where(per_n > 0, per_correct / np.maximum(per_n, 1), 0.0)
        amb_l = np.where(per_n > 0, per_ambig / np.maximum(per_n, 1), 0.0)
    overall = n_correct / n if n else 0.0
    ambig = n_ambig_correct / n if n else 0.0
    return Metrics(n=n, overall_accuracy=overall, accuracy_with_ambiguity=ambig,
                   per_label_accuracy=acc_l, per_label_ambiguity=amb_l,
                   per_label_n=per_n, misprediction_matrix=mat,
                   overall_error=Metrics.binomial_error(overall, n),
                   ambiguity_error=Metrics.binomial_error(ambig, n))


def evaluate(net: Network, ds: Dataset, ep: EncodingParams, seed: int,
             fast: bool = True) -> Metrics:
    """Classify every stimulus of `ds` and aggregate.  Evaluation leaves the
    learned state (weights, V_t) untouched."""
    preds = []
    for k in range(ds.count):
        img, label = ds.stimulus(k)
        ss = np.random.SeedSequence((int(seed), 0xE7A7, k))
        preds.append(predict(net, img, ep,
                             seed=int(ss.generate_state(1, dtype=np.uint64)[0]),
                             label=label, fast=fast))
    return aggregate(preds)


METRICS_COLUMNS = (["config_id", "n_train_per_worker", "workers", "layer_sizes",
                    "n_test", "overall_acc", "overall_acc_err",
                    "acc_with_ambig", "acc_with_ambig_err"]
                   + [f"acc_{d}" for d in range(10)]
                   + [f"ambig_{d}" for d in range(10)])


def metrics_row(m: Metrics, config_id: str, n_train_per_worker: int,
                workers: int, layer_sizes: List[int]) -> dict:
    row = {
        "config_id": config_id,
        "n_train_per_worker": n_train_per_worker,
        "workers": workers,
        "layer_sizes": "x".join(str(s) for s in layer_sizes),
        "n_test": m.n,
        "overall_acc": f"{m.overall_accuracy:.6f}",
        "overall_acc_err": f"{m.overall_error:.6f}",
        "acc_with_ambig": f"{m.accuracy_with_ambiguity:.6f}",
        "acc_with_ambig_err": f"{m.ambiguity_error:.6f}",
    }
    for d in range(10):
        row[f"acc_{d}"] = f"{m.per_label_accuracy[d]:.6f}"
    for d in range(10):
        row[f"ambig_{d}"] = f"{m.per_label_ambiguity[d]:.6f}"
    return row


def report(metrics_rows: List[dict], matrices: List[np.ndarray],
           out_dir: str) -> List[str]:
    """Write metrics.csv, per_label.csv, mispred_matrix.csv and SVG charts.
    Returns the list of written paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        written = []

        path = os.path.join(out_dir, "metrics.csv")
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=METRICS_COLUMNS)
            w.writeheader()
            for row in metrics_rows:
                w.writerow(row)
        written.append(path)

        path = os.path.join(out_dir, "per_label.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["config_id", "label", "accuracy", "accuracy_with_ambiguity"])
            for row in metrics_rows:
                for d in range(10):
                    w.writerow([row["config_id"], d, row[f"acc_{d}"], row[f"ambig_{d}"]])
        written.append(path)

        path = os.path.join(out_dir, "mispred_matrix.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["input_label"] + [f"pred_{d}" for d in range(10)])
            for i, mat in enumerate(matrices):
                for r in range(10):
                    w.writerow([r] + [f"{mat[r, c]:.6f}" for c in range(10)])
        written.append(path)

        if metrics_rows:
            series = [(row["config_id"], float(row["n_train_per_worker"]),
                       float(row["overall_acc"])) for row in metrics_rows]
            path = os.path.join(out_dir, "accuracy_vs_nsample.svg")
            report_mod.line_chart(
                series, "training samples per worker", "overall accuracy", path)
            written.append(path)

            last = metrics_rows[-1]
            path = os.path.join(out_dir, "per_label_accuracy.svg")
            report_mod.bar_chart(
                [float(last[f"acc_{d}"]) for d in range(10)],
                [str(d) for d in range(10)],
                "input label", "overall accuracy", path)
            written.append(path)

        if matrices:
            path = os.path.join(out_dir, "mispred_heatmap.svg")
            report_mod.heatmap(matrices[-1], "predicted label", "input label", path)
            written.append(path)
        return written
    except OSError as e:
        raise IoFailure(str(e)) from e
