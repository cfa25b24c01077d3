"""Acceptance suite: one test per release criterion, each printing a single
PASS/FAIL/SKIP line.  Criteria that need the official MNIST corpus skip with
an explicit reason when it is absent; they are implemented in full and run
when SNN_DATA_DIR points at the four IDX files."""

import glob
import json
import os
import time

import numpy as np
import pytest

from conftest import MNIST_DIR, mnist_available, needs_mnist
from oracles import random_script, replay_script
from test_plasticity import FakeProj, base_stdp, drive_script

from snnkit.cli import EXIT_OK, main as cli_main
from snnkit.data import load_mnist, parse_idx_images, parse_idx_labels, take_subset
from snnkit.engine import NeuronParams, advance_population, theta_vt
from snnkit.errors import DataError
from snnkit.evaluator import evaluate
from snnkit.params import (DT, E_REST, V_THRES, BASE_HYPER, EncodingParams,
                           HyperParams)
from snnkit.plasticity import theta_w
from snnkit.topology import (EVAL, NetworkSpec, NeuronPopulation,
                             build_network, merge_base_networks, set_phase)
from snnkit.trainer import (TrainConfig, train_direct,
                            train_parallel_diversity)


def verdict(num, title, status, detail=""):
    tail = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {num} [{title}]: {status}{tail}")


MNIST_SKIP = ("official MNIST IDX files not available in this sandbox "
              "(no network access); set SNN_DATA_DIR to run")


def test_criterion_1_plasticity_oracle_equivalence():
    """200 random spike scripts against the independent event-driven replay."""
    t0 = time.time()
    worst = 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n_pre = int(rng.integers(1, 6))
        n_post = int(rng.integers(1, 6))
        groups = rng.integers(0, 3, size=n_post)
        sp = base_stdp(w_max=float(rng.uniform(0.5, 30.0)),
                       a2_minus=float(rng.uniform(1e-4, 1e-2)),
                       a3_plus=float(rng.uniform(1e-4, 1e-2)))
        w0 = rng.uniform(0, sp.w_max, size=(n_pre, n_post))
        script = random_script(rng, 1000, n_pre, n_post, 100)
        proj = FakeProj(n_pre, n_post, sp, groups=groups, w0=w0)
        drive_script(script, proj)
        expected = replay_script(script, n_pre, n_post, groups, 0, w0, sp, DT)
        worst = max(worst, float(np.abs(proj.w - expected).max()))
    elapsed = time.time() - t0
    assert worst < 1e-9, f"max weight deviation {worst:.2e}"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    verdict(1, "plasticity oracle equivalence", "PASS",
            f"max dev {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_analytic_decay_suite():
    """V, g_e, g_i, V_t relaxations match closed forms for 50 random draws
    from the documented tuning ranges."""
    t0 = time.time()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        h = BASE_HYPER.replaced(
            tau_m=float(rng.uniform(10.0, 200.0)),
            tau_ge=float(rng.uniform(1.0, 10.0)),
            tau_gi=float(rng.uniform(1.0, 10.0)),
            tau_adpt=float(np.exp(rng.uniform(np.log(10.0), np.log(1e8)))))
        p = NeuronParams.from_hyper(h)
        pop = NeuronPopulation(1, h, layer=0, base=0)
        pop.V[:] = V_THRES
        pop.g_e[:] = 2.0
        pop.g_i[:] = 3.0
        pop.V_t[:] = V_THRES + 5.0
        n = 1000
        for _s in range(n):
            advance_population(pop, p, DT)
        T = n * DT
        exp_V = E_REST + (V_THRES - E_REST) * np.exp(-T / h.tau_m)
        # V decays in the g=0 limit only; conductances start nonzero here, so
        # check V separately with a second, conductance-free run
        pop2 = NeuronPopulation(1, h, layer=0, base=0)
        pop2.V[:] = V_THRES
        for _s in range(n):
            advance_population(pop2, p, DT)
        checks = [
            (pop2.V[0], exp_V),
            (pop.g_e[0], 2.0 * np.exp(-T / h.tau_ge)),
            (pop.g_i[0], 3.0 * np.exp(-T / h.tau_gi)),
            (pop.V_t[0], V_THRES + 5.0 * np.exp(-T / h.tau_adpt)),
        ]
        for got, want in checks:
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    elapsed = time.time() - t0
    assert worst < 1e-9, f"worst relative error {worst:.2e}"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    verdict(2, "analytic decay suite", "PASS",
            f"worst rel err {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_saturation_anchors():
    """The soft gates evaluate to exactly 0.5 at their midpoints for 100
    random (shift, scale) draws."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        shift = float(rng.uniform(0.01, 0.99))
        scale = float(rng.uniform(0.01, 1.0))
        sp = base_stdp(w_shift=shift, w_scale=scale)
        worst = max(worst, abs(float(theta_w(sp.w_max * (1.0 - shift), sp)) - 0.5))
        p = NeuronParams.from_hyper(
            BASE_HYPER.replaced(v_tshift=shift, v_tscale=scale))
        worst = max(worst, abs(float(theta_vt(V_THRES * shift, p)) - 0.5))
    assert worst < 1e-12, f"worst anchor deviation {worst:.2e}"
    verdict(3, "saturation anchors", "PASS", f"worst dev {worst:.2e}")


def test_criterion_4_normalization_invariant(surrogate):
    """After training, every plastic projection's mean incoming weight is
    lambda * w_max within 1e-12 relative."""
    from snnkit.params import TWO_LAYER_HYPER
    ds = take_subset(surrogate, 0, 10)
    worst = 0.0
    for sizes, hyper in ([10], [BASE_HYPER]), ([20, 10], TWO_LAYER_HYPER):
        net = build_network(NetworkSpec(sizes, hyper), seed=0)
        train_direct(net, ds, TrainConfig(n_train=10, seed=0,
                                          encoding=EncodingParams(duration=60.0)))
        for pr in net.projections:
            if not pr.plastic:
                continue
            target = pr.stdp.lam * pr.stdp.w_max
            rel = np.abs(pr.w.mean(axis=0) - target) / target
            worst = max(worst, float(rel.max()))
    assert worst < 1e-12, f"worst relative deviation {worst:.2e}"
    verdict(4, "normalization invariant", "PASS", f"worst rel dev {worst:.2e}")


@needs_mnist
def test_criterion_5_one_shot_parallel():
    """25 workers x 10 stimuli, merged; overall accuracy above 3x chance on
    10^4 test stimuli."""
    train = load_mnist(MNIST_DIR, "train")
    train = take_subset(train, 0, train.count, shuffle_seed=0)
    cfg = TrainConfig(n_train=10, seed=0, workers=25)
    states = train_parallel_diversity(train, cfg)
    net = merge_base_networks(states)
    set_phase(net, EVAL)
    test = take_subset(load_mnist(MNIST_DIR, "test"), 0, 10_000)
    m = evaluate(net, test, EncodingParams(), seed=1)
    ok = m.overall_accuracy > 0.30
    verdict(5, "one-shot parallel training", "PASS" if ok else "FAIL",
            f"acc {m.overall_accuracy:.3f} vs > 0.30")
    assert ok


def test_criterion_5_skip_note():
    if mnist_available():
        pytest.skip("real corpus present; the full test ran")
    verdict(5, "one-shot parallel training", "SKIP", MNIST_SKIP)
    pytest.skip(MNIST_SKIP)


@needs_mnist
def test_criterion_6_large_sample_base_network():
    """Compute-limited variant: 10^4 direct training stimuli must land near
    the published learning curve (~80% +/- 8 points)."""
    train = load_mnist(MNIST_DIR, "train")
    train = take_subset(train, 0, 10_000, shuffle_seed=0)
    net = build_network(NetworkSpec([10], [BASE_HYPER]), seed=0)
    train_direct(net, train, TrainConfig(n_train=10_000, seed=0))
    set_phase(net, EVAL)
    test = take_subset(load_mnist(MNIST_DIR, "test"), 0, 10_000)
    m = evaluate(net, test, EncodingParams(), seed=1)
    ok = 0.72 <= m.overall_accuracy <= 0.95
    verdict(6, "large-sample base network", "PASS" if ok else "FAIL",
            f"acc {m.overall_accuracy:.3f} vs [0.72, 0.95]")
    assert ok


def test_criterion_6_skip_note():
    if mnist_available():
        pytest.skip("real corpus present; the full test ran")
    verdict(6, "large-sample base network", "SKIP", MNIST_SKIP)
    pytest.skip(MNIST_SKIP)


@needs_mnist
def test_criterion_7_monotonic_trend():
    """Accuracy non-decreasing in n_train within 2 binomial standard errors."""
    train = load_mnist(MNIST_DIR, "train")
    train = take_subset(train, 0, train.count, shuffle_seed=0)
    test = take_subset(load_mnist(MNIST_DIR, "test"), 0, 2000)
    points = []
    for n in (10, 100, 1000, 10_000):
        net = build_network(NetworkSpec([10], [BASE_HYPER]), seed=0)
        train_direct(net, take_subset(train, 0, n),
                     TrainConfig(n_train=n, seed=0))
        set_phase(net, EVAL)
        m = evaluate(net, test, EncodingParams(), seed=1)
        points.append((n, m.overall_accuracy, m.overall_error))
    ok = all(b_acc >= a_acc - 2 * (a_err + b_err)
             for (_, a_acc, a_err), (_, b_acc, b_err)
             in zip(points, points[1:]))
    verdict(7, "monotonic training-size trend", "PASS" if ok else "FAIL",
            ", ".join(f"{n}:{a:.3f}" for n, a, _ in points))
    assert ok


def test_criterion_7_skip_note():
    if mnist_available():
        pytest.skip("real corpus present; the full test ran")
    verdict(7, "monotonic training-size trend", "SKIP", MNIST_SKIP)
    pytest.skip(MNIST_SKIP)


@needs_mnist
def test_criterion_8_ambiguity_suppression():
    """250 hidden neurons at 10^4 stimuli cut ambiguity to below half the
    10-neuron base network's."""
    train = load_mnist(MNIST_DIR, "train")
    train = take_subset(train, 0, 10_000, shuffle_seed=0)
    test = take_subset(load_mnist(MNIST_DIR, "test"), 0, 5000)
    ambig = {}
    for n_hidden in (10, 250):
        net = build_network(NetworkSpec([n_hidden], [BASE_HYPER]), seed=0)
        train_direct(net, train, TrainConfig(n_train=10_000, seed=0))
        set_phase(net, EVAL)
        m = evaluate(net, test, EncodingParams(), seed=1)
        ambig[n_hidden] = m.accuracy_with_ambiguity
    ok = ambig[250] < 0.5 * ambig[10]
    verdict(8, "ambiguity suppression", "PASS" if ok else "FAIL",
            f"10n: {ambig[10]:.4f}, 250n: {ambig[250]:.4f}, "
            f"ratio {ambig[250] / max(ambig[10], 1e-12):.2f}")
    assert ok


def test_criterion_8_skip_note():
    if mnist_available():
        pytest.skip("real corpus present; the full test ran")
    verdict(8, "ambiguity suppression", "SKIP", MNIST_SKIP)
    pytest.skip(MNIST_SKIP)


def _strip_manifest(d):
    m = json.loads((d / "manifest.json").read_text())
    m.pop("wall_clock_s", None)
    m.pop("finished_at", None)
    return m


def test_criterion_9_cli_determinism(tmp_path, surrogate_idx_dir):
    """Rerunning each CLI command reproduces its outputs bit-identically
    (manifest wall-clock fields aside)."""
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"encoding": {"duration": 60.0}}))
    checked = 0
    for tag in ("x", "y"):
        root = tmp_path / tag
        assert cli_main(["--data-dir", surrogate_idx_dir, "train",
                         "--n-train", "3", "--workers", "2", "--seed", "0",
                         "--config", str(cfg),
                         "--out", str(root / "models")]) == EXIT_OK
        assert cli_main(["--data-dir", surrogate_idx_dir, "eval",
                         "--models", str(root / "models"),
                         "--n-test", "5", "--seed", "1", "--config", str(cfg),
                         "--out", str(root / "results")]) == EXIT_OK
        assert cli_main(["--data-dir", surrogate_idx_dir, "search",
                         "--budget", "1", "--n-train", "2", "--n-val", "2",
                         "--seed", "0", "--config", str(cfg),
                         "--out", str(root / "search")]) == EXIT_OK
        assert cli_main(["report",
                         "--metrics", str(root / "results" / "metrics.csv"),
                         "--matrix", str(root / "results" / "mispred_matrix.csv"),
                         "--out", str(root / "charts")]) == EXIT_OK
    for sub in ("models", "results", "search", "charts"):
        a, b = tmp_path / "x" / sub, tmp_path / "y" / sub
        names = sorted(os.path.basename(p) for p in glob.glob(str(a / "*")))
        assert names == sorted(os.path.basename(p) for p in glob.glob(str(b / "*")))
        for name in names:
            if name == "manifest.json":
                ma, mb = _strip_manifest(a), _strip_manifest(b)
                # output dirs differ by construction; compare the rest
                for m in (ma, mb):
                    m.get("resolved", {}).pop("models", None)
                    m.get("resolved", {}).pop("metrics", None)
                    m.get("resolved", {}).pop("matrix", None)
                    m.get("inputs", {}).pop("models", None)
                assert ma == mb, name
            else:
                assert (a / name).read_bytes() == (b / name).read_bytes(), name
            checked += 1
    verdict(9, "CLI determinism", "PASS",
            f"{checked} files bit-identical across reruns")


@needs_mnist
def test_criterion_10a_official_counts():
    train = load_mnist(MNIST_DIR, "train")
    test = load_mnist(MNIST_DIR, "test")
    ok = (train.count, test.count) == (60_000, 10_000)
    verdict("10a", "official MNIST counts", "PASS" if ok else "FAIL",
            f"({train.count}, {test.count})")
    assert ok


def test_criterion_10a_skip_note():
    if mnist_available():
        pytest.skip("real corpus present; the full test ran")
    verdict("10a", "official MNIST counts", "SKIP", MNIST_SKIP)
    pytest.skip(MNIST_SKIP)


def test_criterion_10b_mutation_rejection():
    """At least 20 mutated headers / truncations are all rejected."""
    import struct

    good_img = struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(2 * 784)
    good_lab = struct.pack(">II", 0x801, 3) + bytes([1, 2, 3])
    rejected = 0
    cases = []
    for pos in (0, 1, 2, 3, 4, 7, 8, 11, 12, 15):   # header byte flips
        raw = bytearray(good_img)
        raw[pos] ^= 0xFF
        cases.append(bytes(raw))
    for cut in (0, 2, 8, 15, 16, 100, len(good_img) - 1):  # truncations
        cases.append(good_img[:cut])
    lab_cases = []
    for pos in (0, 3, 4, 7):
        raw = bytearray(good_lab)
        raw[pos] ^= 0xFF
        lab_cases.append(bytes(raw))
    lab_cases.append(good_lab[:5])
    lab_cases.append(good_lab[:8] + bytes([1, 2, 77]))     # label > 9
    assert len(cases) + len(lab_cases) >= 20
    for raw in cases:
        with pytest.raises(DataError):
            parse_idx_images(raw)
        rejected += 1
    for raw in lab_cases:
        with pytest.raises(DataError):
            parse_idx_labels(raw)
        rejected += 1
    # sanity: the unmutated files parse
    assert parse_idx_images(good_img).count == 2
    assert parse_idx_labels(good_lab).count == 3
    verdict("10b", "mutation rejection", "PASS", f"{rejected} mutants rejected")
