import numpy as np
import pytest

from snnkit.data import take_subset
from snnkit.errors import BadRange
from snnkit.hypersearch import (BASE_RANGES, MULTILAYER_RANGES, SearchRecord,
                                diversity_pool, random_search, rank_records,
                                read_ranked_csv, sample_config, sample_value,
                                write_ranked_csv)
from snnkit.params import BASE_HYPER, EncodingParams, HyperParams


class TestSampling:
    def test_values_within_ranges(self):
        for trial in range(20):
            cfg = sample_config(BASE_RANGES, seed=trial)
            for name, (lo, hi, _mode) in BASE_RANGES.items():
                v = getattr(cfg, name)
                assert lo <= v <= hi, name

    def test_untuned_fields_keep_base(self):
        cfg = sample_config(MULTILAYER_RANGES, seed=0, base=BASE_HYPER)
        assert cfg.tau_m == BASE_HYPER.tau_m
        assert cfg.lambda_ie == BASE_HYPER.lambda_ie
        lo, hi, _ = MULTILAYER_RANGES["w_ee_max"]
        assert lo <= cfg.w_ee_max <= hi

    def test_deterministic_per_seed(self):
        a = sample_config(BASE_RANGES, seed=5)
        b = sample_config(BASE_RANGES, seed=5)
        c = sample_config(BASE_RANGES, seed=6)
        assert a.to_dict() == b.to_dict()
        assert a.to_dict() != c.to_dict()

    def test_degenerate_range_returns_single_point(self):
        rng = np.random.default_rng(0)
        assert sample_value(3.5, 3.5, "lin", rng) == 3.5
        assert sample_value(2.0, 2.0, "log", rng) == 2.0

    def test_inverted_range_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(BadRange):
            sample_value(2.0, 1.0, "lin", rng)

    def test_log_range_needs_positive_low(self):
        rng = np.random.default_rng(0)
        with pytest.raises(BadRange):
            sample_value(0.0, 1.0, "log", rng)

    def test_log_sampling_spans_decades(self):
        rng = np.random.default_rng(1)
        draws = [sample_value(1e-3, 1e3, "log", rng) for _ in range(200)]
        # roughly a third of log-uniform draws fall below 1e-1
        assert 0.15 < np.mean(np.array(draws) < 1e-1) < 0.55


def rec(seed, acc, ambig, failure=None):
    return SearchRecord(config=HyperParams(), seed=seed, val_accuracy=acc,
                        val_ambiguity=ambig, failure=failure)


class TestRanking:
    def test_total_order(self):
        records = [rec(0, 0.5, 0.1), rec(1, 0.9, 0.3), rec(2, 0.9, 0.1),
                   rec(3, 0.2, 0.0, failure="NonFiniteState: boom")]
        ranked = rank_records(records)
        assert [r.seed for r in ranked] == [2, 1, 0, 3]
        assert [r.rank for r in ranked] == [0, 1, 2, 3]

    def test_permutation_stable(self):
        records = [rec(s, acc, amb) for s, (acc, amb) in
                   enumerate([(0.1, 0.0), (0.8, 0.2), (0.8, 0.1), (0.5, 0.5)])]
        a = [r.seed for r in rank_records(list(records))]
        b = [r.seed for r in rank_records(list(reversed(records)))]
        assert a == b

    def test_failures_always_last(self):
        records = [rec(0, 1.0, 0.0, failure="x"), rec(1, 0.0, 1.0)]
        ranked = rank_records(records)
        assert ranked[0].seed == 1

    def test_diversity_pool_skips_failures(self):
        records = [rec(0, 0.9, 0.0, failure="x"), rec(1, 0.7, 0.1),
                   rec(2, 0.8, 0.0)]
        pool = diversity_pool(records, 5)
        assert len(pool) == 2

    def test_diversity_pool_truncates(self):
        records = [rec(s, 0.5 + s / 100, 0.0) for s in range(6)]
        assert len(diversity_pool(records, 3)) == 3


class TestCsvRoundtrip:
    def test_roundtrip(self, tmp_path):
        records = rank_records([
            SearchRecord(config=sample_config(BASE_RANGES, seed=s), seed=s,
                         val_accuracy=0.1 * s, val_ambiguity=0.01 * s)
            for s in range(4)])
        records[-1].failure = "NonFiniteState: diverged"
        path = str(tmp_path / "ranked.csv")
        write_ranked_csv(records, path)
        again = read_ranked_csv(path)
        assert len(again) == 4
        for a, b in zip(records, again):
            assert a.config.to_dict() == b.config.to_dict()
            assert (a.seed, a.rank, a.failure) == (b.seed, b.rank, b.failure)
            assert a.val_accuracy == pytest.approx(b.val_accuracy, abs=1e-6)


class TestRandomSearch:
    def test_budget_one_on_tiny_data(self, surrogate):
        train = take_subset(surrogate, 0, 3)
        val = take_subset(surrogate, 3, 3)
        ep = EncodingParams(duration=60.0)
        ranked = random_search(train, val, budget=2, seed=0, encoding=ep)
        assert len(ranked) == 2
        assert [r.rank for r in ranked] == [0, 1]
        for r in ranked:
            if r.failure is None:
                assert 0.0 <= r.val_accuracy <= 1.0

    def test_deterministic(self, surrogate):
        train = take_subset(surrogate, 0, 2)
        val = take_subset(surrogate, 2, 2)
        ep = EncodingParams(duration=50.0)
        a = random_search(train, val, budget=2, seed=3, encoding=ep)
        b = random_search(train, val, budget=2, seed=3, encoding=ep)
        assert [(r.seed, r.val_accuracy, r.failure) for r in a] == \
            [(r.seed, r.val_accuracy, r.failure) for r in b]
        assert a[0].config.to_dict() == b[0].config.to_dict()

    def test_multilayer_reuses_base_configs(self, surrogate):
        train = take_subset(surrogate, 0, 2)
        val = take_subset(surrogate, 2, 2)
        ep = EncodingParams(duration=50.0)
        donors = [SearchRecord(config=BASE_HYPER.replaced(tau_m=123.0),
                               seed=0, val_accuracy=0.9, val_ambiguity=0.0)]
        ranked = random_search(train, val, budget=1, seed=1, encoding=ep,
                               layer_sizes=[10, 10], base_records=donors)
        cfg = ranked[0].config
        assert cfg.tau_m == 123.0  # inherited, not retuned
        lo, hi, _ = MULTILAYER_RANGES["lambda_ee"]
        assert lo <= cfg.lambda_ee <= hi

    def test_rejects_zero_budget(self, surrogate):
        train = take_subset(surrogate, 0, 2)
        with pytest.raises(ValueError):
            random_search(train, train, budget=0, seed=0)
