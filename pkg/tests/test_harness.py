"""Harness tests: config handling, the acquisition loop contract, result
files, and aggregation."""

import json
import os

import numpy as np
import pytest

from besra.data import generate_synthetic, save_dataset
from besra.harness import (
    AggregateBand,
    ExperimentConfig,
    GenerateSpec,
    IterationRecord,
    LearningCurve,
    aggregate,
    derive_seed,
    export_plot_csv,
    load_curves,
    run_experiment,
)
from besra.metrics import MetricsReport
from besra.models import TrainConfig
from besra.scoring import ScoreParams

from oracles import bootstrap_band_oracle


def tiny_spec(seed=2):
    return GenerateSpec(n_train=60, n_test=30, target_mean_ir=5.0,
                        n_labels=4, dim=8, test_mean_ir=5.0, seed=seed)


def tiny_config(tmp_path, strategy="random", **overrides):
    kwargs = dict(
        strategy=strategy,
        output_dir=str(tmp_path / "out"),
        dataset=tiny_spec(),
        n_members=2,
        initial_labeled=20,
        batch_size=10,
        iterations=1,
        estimation_pool_size=15,
        seeds=(0,),
        train=TrainConfig(epochs=15),
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def flat_curve(value, seed=0, checkpoints=(30, 40), strategy="random"):
    records = tuple(
        IterationRecord(i + 1, cp, MetricsReport(value, value, value, value,
                                                 value, value),
                        (0,), (-1,))
        for i, cp in enumerate(checkpoints)
    )
    return LearningCurve(strategy, seed, records)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(3, 1, 4) == derive_seed(3, 1, 4)

    def test_streams_distinct(self):
        seen = {derive_seed(0, s, 1) for s in range(6)}
        assert len(seen) == 6

    def test_counters_distinct(self):
        assert derive_seed(0, 3, 1, 0) != derive_seed(0, 3, 1, 1)
        assert derive_seed(0, 3, 1) != derive_seed(0, 3, 2)


class TestConfig:
    def test_unknown_strategy(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            ExperimentConfig("magic", "out", dataset=tiny_spec())

    def test_default_params_for_besra(self):
        cfg = ExperimentConfig("besra", "out", dataset=tiny_spec())
        assert cfg.params == ScoreParams(0.1, 3.0)
        assert cfg.strategy_tag == "besra_a0.1_b3"

    def test_baselines_have_plain_tags(self):
        cfg = ExperimentConfig("random", "out", dataset=tiny_spec())
        assert cfg.strategy_tag == "random"

    def test_dataset_source_exclusive(self):
        with pytest.raises(ValueError, match="exactly one dataset source"):
            ExperimentConfig("random", "out")
        with pytest.raises(ValueError, match="exactly one dataset source"):
            ExperimentConfig("random", "out", dataset=tiny_spec(),
                             train_path="a.txt", test_path="b.txt")
        with pytest.raises(ValueError, match="both train_path and test_path"):
            ExperimentConfig("random", "out", train_path="a.txt")

    @pytest.mark.parametrize("field,value", [
        ("batch_size", 0), ("iterations", 0), ("n_members", 1),
        ("initial_labeled", 0), ("estimation_pool_size", 0),
        ("validation_size", -1), ("threshold", 1.0), ("seeds", ()),
        ("seeds", (1, 1))])
    def test_validation(self, field, value):
        with pytest.raises(ValueError):
            ExperimentConfig("random", "out", dataset=tiny_spec(),
                             **{field: value})

    def test_round_trip_through_dict(self):
        cfg = ExperimentConfig("besra", "out", dataset=tiny_spec(),
                               params=ScoreParams(1.0, 2.0), seeds=(3, 4),
                               train=TrainConfig(epochs=25, seed=9))
        clone = ExperimentConfig.from_dict(cfg.to_dict())
        assert clone == cfg

    def test_from_dict_with_paths(self):
        cfg = ExperimentConfig.from_dict({
            "strategy": "uncertainty",
            "output_dir": "out",
            "dataset": {"train_path": "tr.txt", "test_path": "te.txt"},
        })
        assert cfg.train_path == "tr.txt"
        assert cfg.test_path == "te.txt"
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_alpha_beta_must_pair(self):
        with pytest.raises(ValueError, match="together"):
            ExperimentConfig.from_dict({
                "strategy": "besra", "output_dir": "out",
                "dataset": {"n_train": 60}, "alpha": 0.1})


class TestRunExperiment:
    def test_single_iteration_shape(self, tmp_path):
        cfg = tiny_config(tmp_path)
        curves = run_experiment(cfg)
        assert len(curves) == 1
        curve = curves[0]
        assert len(curve.records) == 1
        rec = curve.records[0]
        assert rec.iteration == 1
        assert rec.labeled_count == cfg.initial_labeled + cfg.batch_size
        assert len(rec.acquired) == cfg.batch_size
        assert not curve.stopped_early
        assert os.path.exists(tmp_path / "out" / "config.json")
        assert os.path.exists(tmp_path / "out" / "curve_random_seed0.jsonl")
        assert not os.path.exists(tmp_path / "out" / "aggregate.csv")

    def test_labeled_counts_grow_by_batch(self, tmp_path):
        cfg = tiny_config(tmp_path, iterations=3)
        (curve,) = run_experiment(cfg)
        assert curve.checkpoints() == (30, 40, 50)

    def test_acquired_indices_disjoint_across_iterations(self, tmp_path):
        cfg = tiny_config(tmp_path, iterations=3)
        (curve,) = run_experiment(cfg)
        seen = [i for rec in curve.records for i in rec.acquired]
        assert len(seen) == len(set(seen))

    def test_early_stop_marker(self, tmp_path):
        cfg = tiny_config(tmp_path, initial_labeled=45, batch_size=10,
                          iterations=5)
        (curve,) = run_experiment(cfg)
        # 15 unlabeled: one batch fits, then the pool is exhausted
        assert len(curve.records) == 1
        assert curve.stopped_early
        (loaded,) = load_curves(tmp_path / "out" / "curve_random_seed0.jsonl")
        assert loaded.stopped_early
        assert loaded.checkpoints() == curve.checkpoints()

    def test_besra_strategy_end_to_end(self, tmp_path):
        cfg = tiny_config(tmp_path, strategy="besra", batch_size=3)
        (curve,) = run_experiment(cfg)
        rec = curve.records[0]
        assert len(rec.acquired) == 3
        assert sorted(rec.cluster_ids) == [0, 1, 2]
        assert os.path.exists(tmp_path / "out" / "curve_besra_a0.1_b3_seed0.jsonl")

    def test_uncertainty_strategy_end_to_end(self, tmp_path):
        cfg = tiny_config(tmp_path, strategy="uncertainty")
        (curve,) = run_experiment(cfg)
        assert curve.records[0].cluster_ids == (-1,) * 10

    def test_file_dataset_source(self, tmp_path):
        train_set, test_set = tiny_spec().realize()
        save_dataset(train_set, tmp_path / "train.txt")
        save_dataset(test_set, tmp_path / "test.txt")
        cfg = tiny_config(tmp_path, dataset=None,
                          train_path=str(tmp_path / "train.txt"),
                          test_path=str(tmp_path / "test.txt"))
        (curve,) = run_experiment(cfg)
        assert curve.records[0].labeled_count == 30

    def test_multi_seed_writes_aggregate(self, tmp_path):
        cfg = tiny_config(tmp_path, seeds=(0, 1))
        curves = run_experiment(cfg)
        assert [c.seed for c in curves] == [0, 1]
        assert os.path.exists(tmp_path / "out" / "curve_random_seed0.jsonl")
        assert os.path.exists(tmp_path / "out" / "curve_random_seed1.jsonl")
        agg = (tmp_path / "out" / "aggregate.csv").read_text().splitlines()
        assert agg[0] == "series,metric,labeled,mean,lower,upper"
        assert len(agg) == 1 + 6  # six metrics, one checkpoint each

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg_a = tiny_config(tmp_path, output_dir=str(tmp_path / "a"),
                            seeds=(0, 1))
        cfg_b = tiny_config(tmp_path, output_dir=str(tmp_path / "b"),
                            seeds=(0, 1))
        run_experiment(cfg_a)
        run_experiment(cfg_b)
        names_a = sorted(os.listdir(tmp_path / "a"))
        assert names_a == sorted(os.listdir(tmp_path / "b"))
        for name in names_a:
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            if name == "config.json":  # differs only in output_dir
                continue
            assert a == b, name

    def test_replicates_differ(self, tmp_path):
        cfg = tiny_config(tmp_path, seeds=(0, 1))
        c0, c1 = run_experiment(cfg)
        assert c0.records[0].acquired != c1.records[0].acquired


class TestCurveFiles:
    def test_round_trip(self, tmp_path):
        cfg = tiny_config(tmp_path, strategy="besra", iterations=2,
                          batch_size=5)
        (curve,) = run_experiment(cfg)
        (loaded,) = load_curves(tmp_path / "out" / "curve_besra_a0.1_b3_seed0.jsonl")
        assert loaded.strategy == curve.strategy
        assert loaded.seed == curve.seed
        assert loaded.params == curve.params
        assert loaded.checkpoints() == curve.checkpoints()
        for got, want in zip(loaded.records, curve.records):
            assert got.acquired == want.acquired
            assert got.cluster_ids == want.cluster_ids
            assert got.metrics == want.metrics  # 17 digits round-trips exactly

    def test_rejects_unknown_schema(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"schema": "other-v0"}\n')
        with pytest.raises(ValueError, match="unknown schema"):
            load_curves(path)

    def test_metric_values_validation(self):
        curve = flat_curve(0.5)
        with pytest.raises(ValueError, match="unknown metric"):
            curve.metric_values("auc")


class TestAggregate:
    def test_mean_of_two_flat_curves(self):
        band = aggregate([flat_curve(0.4, seed=0), flat_curve(0.6, seed=1)])
        assert band.mean == (0.5, 0.5)
        assert band.checkpoints == (30, 40)
        assert band.n_curves == 2
        for lo, hi in zip(band.lower, band.upper):
            assert 0.4 <= lo <= 0.5 <= hi <= 0.6

    def test_identical_curves_zero_width(self):
        band = aggregate([flat_curve(0.7, seed=s) for s in range(3)])
        assert band.lower == band.mean == band.upper
        assert band.mean == pytest.approx((0.7, 0.7), abs=1e-12)

    def test_deterministic(self):
        curves = [flat_curve(0.4), flat_curve(0.6, seed=1)]
        a = aggregate(curves)
        b = aggregate(curves)
        assert a == b

    def test_matches_independent_bootstrap(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(0.3, 0.9, size=(6, 2))
        curves = [
            LearningCurve("random", s, tuple(
                IterationRecord(i + 1, 30 + 10 * i,
                                MetricsReport(v, v, v, v, v, v), (0,), (-1,))
                for i, v in enumerate(row)))
            for s, row in enumerate(values)
        ]
        band = aggregate(curves, n_boot=20_000, seed=1)
        lo, hi = bootstrap_band_oracle(values, n_boot=20_000)
        np.testing.assert_allclose(band.lower, lo, atol=0.005)
        np.testing.assert_allclose(band.upper, hi, atol=0.005)

    def test_misaligned_checkpoints(self):
        with pytest.raises(ValueError, match="misaligned"):
            aggregate([flat_curve(0.4), flat_curve(0.6, checkpoints=(30, 50))])

    def test_needs_two_curves(self):
        with pytest.raises(ValueError, match="at least 2"):
            aggregate([flat_curve(0.4)])

    def test_empty_curves_rejected(self):
        empty = LearningCurve("random", 0, ())
        with pytest.raises(ValueError, match="no records"):
            aggregate([empty, LearningCurve("random", 1, ())])


class TestExportPlotCsv:
    def test_groups_by_tag(self, tmp_path):
        cfg_r = tiny_config(tmp_path, output_dir=str(tmp_path / "r"),
                            seeds=(0, 1))
        cfg_b = tiny_config(tmp_path, strategy="besra",
                            output_dir=str(tmp_path / "b"), seeds=(0, 1))
        run_experiment(cfg_r)
        run_experiment(cfg_b)
        paths = [
            tmp_path / "r" / "curve_random_seed0.jsonl",
            tmp_path / "r" / "curve_random_seed1.jsonl",
            tmp_path / "b" / "curve_besra_a0.1_b3_seed0.jsonl",
            tmp_path / "b" / "curve_besra_a0.1_b3_seed1.jsonl",
        ]
        out = tmp_path / "plot.csv"
        export_plot_csv(paths, out, metrics=("micro_f1", "macro_f1"))
        lines = out.read_text().splitlines()
        assert lines[0] == "series,metric,labeled,mean,lower,upper"
        series = {line.split(",")[0] for line in lines[1:]}
        assert series == {"random", "besra_a0.1_b3"}
        # sorted series and metric blocks, one row per checkpoint
        assert len(lines) == 1 + 2 * 2 * 1
