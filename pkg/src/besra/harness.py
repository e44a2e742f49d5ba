"""Experiment harness: configuration, the acquisition loop, persistence,
aggregation, and plot export.

One experiment = one dataset, one strategy, several replicate seeds.  Per
seed the loop seeds an initial labeled set, then for each iteration
acquires a batch with the current ensemble, moves it (with ground-truth
labels, a simulated annotator) into the labeled set, retrains from
scratch, and evaluates on the held-out test split.  Each record therefore
carries metrics of an ensemble trained on exactly `labeled_count` labels.

Every random draw comes from a counter-based derivation: the replicate
seed plus a stream id plus the iteration number feed a SeedSequence, so
streams never collide and runs are reproducible byte for byte.  Results
are line-delimited records, one file per (strategy, seed), floats printed
with 17 significant digits; wall times are logged but never persisted,
keeping output directories byte-identical across reruns.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import (
    EstimationPool,
    random_acquire,
    score_pool,
    select_batch,
    uncertainty_acquire,
)
from .data import MultiLabelDataset, generate_synthetic, load_dataset, mean_ir
from .ensemble import uniform_weights
from .metrics import MetricsReport, evaluate
from .models import TrainConfig, ensemble_probs, train_ensemble
from .scoring import ScoreParams

__all__ = [
    "GenerateSpec",
    "ExperimentConfig",
    "IterationRecord",
    "LearningCurve",
    "AggregateBand",
    "run_experiment",
    "load_curves",
    "aggregate",
    "export_plot_csv",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("besra", "random", "uncertainty")

# stream ids for the counter-based seed derivation
_S_INIT = 0
_S_VALIDATION = 1
_S_POOL = 2
_S_ENSEMBLE = 3
_S_KMEANS = 4
_S_RANDOM = 5

_SCHEMA = "besra-curve-v1"
_METRIC_FIELDS = ("micro_f1", "macro_f1", "precision", "recall",
                  "precision_at_5", "recall_at_5")


def derive_seed(*path: int) -> int:
    """Collapse an integer path (root, stream, counters...) to one seed."""
    return int(np.random.SeedSequence(list(path)).generate_state(1)[0])


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class GenerateSpec:
    """Synthetic dataset request embedded in an experiment config."""

    n_train: int = 1200
    n_test: int = 600
    target_mean_ir: float = 50.0
    n_labels: int = 10
    dim: int = 50
    test_mean_ir: float = 50.0
    noise: float = 0.15
    feature_scale: float = 1.0
    seed: int = 0

    def realize(self) -> tuple[MultiLabelDataset, MultiLabelDataset]:
        return generate_synthetic(
            self.n_train, self.n_test, self.target_mean_ir,
            n_labels=self.n_labels, dim=self.dim,
            test_mean_ir=self.test_mean_ir, noise=self.noise,
            feature_scale=self.feature_scale, seed=self.seed,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; validated on construction.

    The dataset comes either from ``dataset`` (a generation spec) or from
    ``train_path``/``test_path`` files, not both.  The dataset seed lives
    in the generation request and is shared by all replicate seeds, so strategies
    compared across configs see identical data.
    """

    strategy: str
    output_dir: str
    dataset: GenerateSpec | None = None
    train_path: str | None = None
    test_path: str | None = None
    params: ScoreParams | None = None
    n_members: int = 5
    initial_labeled: int = 100
    batch_size: int = 100
    iterations: int = 5
    estimation_pool_size: int = 300
    validation_size: int = 0
    threshold: float = 0.5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}"
            )
        if self.strategy == "besra" and self.params is None:
            object.__setattr__(self, "params", ScoreParams(0.1, 3.0))
        have_spec = self.dataset is not None
        have_files = self.train_path is not None or self.test_path is not None
        if have_spec == have_files:
            raise ValueError(
                "exactly one dataset source required: a generation spec "
                "or train_path + test_path"
            )
        if have_files and (self.train_path is None or self.test_path is None):
            raise ValueError("file datasets need both train_path and test_path")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.n_members < 2:
            raise ValueError(f"n_members must be >= 2, got {self.n_members}")
        if self.initial_labeled < 1:
            raise ValueError(
                f"initial_labeled must be >= 1, got {self.initial_labeled}"
            )
        if self.estimation_pool_size < 1:
            raise ValueError(
                f"estimation_pool_size must be >= 1, got {self.estimation_pool_size}"
            )
        if self.validation_size < 0:
            raise ValueError(
                f"validation_size must be >= 0, got {self.validation_size}"
            )
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if len(self.seeds) == 0:
            raise ValueError("at least one replicate seed required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("replicate seeds must be distinct")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def strategy_tag(self) -> str:
        if self.strategy == "besra":
            return f"besra_a{self.params.alpha:g}_b{self.params.beta:g}"
        return self.strategy

    def load_data(self) -> tuple[MultiLabelDataset, MultiLabelDataset]:
        if self.dataset is not None:
            return self.dataset.realize()
        return load_dataset(self.train_path), load_dataset(self.test_path)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        data = dict(raw)
        spec = None
        if "dataset" in data and data["dataset"] is not None:
            ds = dict(data.pop("dataset"))
            if "train_path" in ds or "test_path" in ds:
                data["train_path"] = ds.get("train_path")
                data["test_path"] = ds.get("test_path")
            else:
                spec = GenerateSpec(**ds)
        params = None
        alpha, beta = data.pop("alpha", None), data.pop("beta", None)
        if alpha is not None or beta is not None:
            if alpha is None or beta is None:
                raise ValueError("alpha and beta must be given together")
            params = ScoreParams(float(alpha), float(beta))
        train_cfg = TrainConfig(**data.pop("train", {}))
        if "seeds" in data:
            data["seeds"] = tuple(data["seeds"])
        return cls(dataset=spec, params=params, train=train_cfg, **data)

    def to_dict(self) -> dict:
        out = {
            "strategy": self.strategy,
            "output_dir": self.output_dir,
            "n_members": self.n_members,
            "initial_labeled": self.initial_labeled,
            "batch_size": self.batch_size,
            "iterations": self.iterations,
            "estimation_pool_size": self.estimation_pool_size,
            "validation_size": self.validation_size,
            "threshold": self.threshold,
            "seeds": list(self.seeds),
            "train": {
                "learning_rate": self.train.learning_rate,
                "epochs": self.train.epochs,
                "l2": self.train.l2,
                "seed": self.train.seed,
            },
        }
        if self.params is not None:
            out["alpha"] = self.params.alpha
            out["beta"] = self.params.beta
        if self.dataset is not None:
            out["dataset"] = {
                "n_train": self.dataset.n_train,
                "n_test": self.dataset.n_test,
                "target_mean_ir": self.dataset.target_mean_ir,
                "n_labels": self.dataset.n_labels,
                "dim": self.dataset.dim,
                "test_mean_ir": self.dataset.test_mean_ir,
                "noise": self.dataset.noise,
                "feature_scale": self.dataset.feature_scale,
                "seed": self.dataset.seed,
            }
        else:
            out["dataset"] = {"train_path": self.train_path,
                              "test_path": self.test_path}
        return out


@dataclass(frozen=True)
class IterationRecord:
    """One checkpoint: metrics of an ensemble trained on labeled_count
    labels, plus the batch that produced that labeled set.

    wall_time_s is measured for logs only; it is never serialized, so
    result files stay byte-identical across reruns.
    """

    iteration: int
    labeled_count: int
    metrics: MetricsReport
    acquired: tuple[int, ...]
    cluster_ids: tuple[int, ...]
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class LearningCurve:
    """All records of one (strategy, seed) run, in iteration order."""

    strategy: str
    seed: int
    records: tuple[IterationRecord, ...]
    params: ScoreParams | None = None
    stopped_early: bool = False

    def checkpoints(self) -> tuple[int, ...]:
        return tuple(r.labeled_count for r in self.records)

    def metric_values(self, metric: str) -> tuple[float, ...]:
        if metric not in _METRIC_FIELDS:
            raise ValueError(f"unknown metric {metric!r}; choose from {_METRIC_FIELDS}")
        return tuple(getattr(r.metrics, metric) for r in self.records)


# --------------------------------------------------------------------------
# The acquisition loop.


def _acquire(cfg: ExperimentConfig, unlabeled, probs, weights, root_seed, iteration):
    if cfg.strategy == "random":
        return random_acquire(unlabeled, cfg.batch_size,
                              derive_seed(root_seed, _S_RANDOM, iteration))
    if cfg.strategy == "uncertainty":
        return uncertainty_acquire(unlabeled, probs, weights, cfg.batch_size)
    pool_size = min(cfg.estimation_pool_size, len(unlabeled))
    rng = np.random.default_rng(derive_seed(root_seed, _S_POOL, iteration))
    drawn = rng.choice(np.asarray(sorted(unlabeled)), size=pool_size, replace=False)
    pool = EstimationPool(tuple(int(i) for i in np.sort(drawn)))
    vectors = score_pool(unlabeled, pool, probs, weights, cfg.params)
    return select_batch(vectors, cfg.batch_size,
                        derive_seed(root_seed, _S_KMEANS, iteration))


def _run_seed(cfg: ExperimentConfig, train_set, test_set, seed: int) -> LearningCurve:
    n = train_set.n_instances
    weights = uniform_weights(cfg.n_members)
    available = np.arange(n)

    if cfg.validation_size > 0:
        rng = np.random.default_rng(derive_seed(seed, _S_VALIDATION))
        val = rng.choice(available, size=cfg.validation_size, replace=False)
        available = np.setdiff1d(available, val)
    if cfg.initial_labeled > available.size:
        raise ValueError(
            f"initial_labeled {cfg.initial_labeled} exceeds the "
            f"{available.size} available training instances"
        )
    rng = np.random.default_rng(derive_seed(seed, _S_INIT))
    labeled = set(
        int(i) for i in rng.choice(available, size=cfg.initial_labeled, replace=False)
    )
    unlabeled = set(int(i) for i in available) - labeled

    def retrain(iteration):
        member_seeds = [derive_seed(seed, _S_ENSEMBLE, iteration, e)
                        for e in range(cfg.n_members)]
        rows = np.asarray(sorted(labeled))
        subset = train_set.subset(rows)
        probs, _, members = train_ensemble(
            subset, cfg.train, cfg.n_members,
            pool_features=train_set.features, member_seeds=member_seeds,
        )
        return probs, members

    probs, members = retrain(0)
    records = []
    stopped_early = False
    for i in range(1, cfg.iterations + 1):
        start = time.perf_counter()
        if len(unlabeled) < cfg.batch_size:
            stopped_early = True
            logger.info("seed %d: unlabeled pool exhausted before iteration %d", seed, i)
            break
        selection = _acquire(cfg, unlabeled, probs, weights, seed, i)
        labeled.update(selection.indices)
        unlabeled.difference_update(selection.indices)
        probs, members = retrain(i)
        test_probs = np.mean(
            np.stack([m.predict_proba(test_set.features) for m in members]), axis=0
        )
        report = evaluate(test_probs, test_set.labels, cfg.threshold)
        elapsed = time.perf_counter() - start
        records.append(IterationRecord(
            iteration=i, labeled_count=len(labeled), metrics=report,
            acquired=selection.indices, cluster_ids=selection.cluster_ids,
            wall_time_s=elapsed,
        ))
        logger.info("seed %d iteration %d: %d labeled, micro_f1=%.4f (%.1fs)",
                    seed, i, len(labeled), report.micro_f1, elapsed)
    return LearningCurve(cfg.strategy, seed, tuple(records), cfg.params, stopped_early)


def _record_line(rec: IterationRecord) -> str:
    parts = [f'"iteration":{rec.iteration}', f'"labeled_count":{rec.labeled_count}']
    for name, value in rec.metrics.as_dict().items():
        parts.append(f'"{name}":{_fmt(value)}')
    parts.append('"acquired":[' + ",".join(str(i) for i in rec.acquired) + "]")
    parts.append('"cluster_ids":[' + ",".join(str(c) for c in rec.cluster_ids) + "]")
    return "{" + ",".join(parts) + "}"


def _curve_path(out_dir, tag: str, seed: int):
    return f"{out_dir}/curve_{tag}_seed{seed}.jsonl"


def _write_curve(cfg: ExperimentConfig, curve: LearningCurve, path) -> None:
    meta = {
        "schema": _SCHEMA,
        "strategy": cfg.strategy,
        "alpha": None if cfg.params is None else cfg.params.alpha,
        "beta": None if cfg.params is None else cfg.params.beta,
        "seed": curve.seed,
        "initial_labeled": cfg.initial_labeled,
        "batch_size": cfg.batch_size,
        "iterations": cfg.iterations,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for rec in curve.records:
            fh.write(_record_line(rec) + "\n")
        if curve.stopped_early:
            fh.write(json.dumps(
                {"stopped_early": True, "completed_iterations": len(curve.records)}
            ) + "\n")


def run_experiment(cfg: ExperimentConfig) -> list[LearningCurve]:
    """Run every replicate seed of a config and persist the results.

    The output directory receives config.json (the resolved config), one
    curve file per seed, and aggregate.csv across seeds (when there are at
    least two).  Identical config and seeds produce byte-identical output.
    """
    train_set, test_set = cfg.load_data()
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(f"{cfg.output_dir}/config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    logger.info("dataset: %d train / %d test, realized MeanIR %.2f",
                train_set.n_instances, test_set.n_instances,
                mean_ir(train_set.labels).mean_ir)

    curves = []
    for seed in cfg.seeds:
        curve = _run_seed(cfg, train_set, test_set, seed)
        _write_curve(cfg, curve, _curve_path(cfg.output_dir, cfg.strategy_tag, seed))
        curves.append(curve)
    if len(curves) >= 2 and all(
        c.checkpoints() == curves[0].checkpoints() and curves[0].records for c in curves
    ):
        bands = {cfg.strategy_tag: {m: aggregate(curves, metric=m)
                                    for m in _METRIC_FIELDS}}
        _write_plot_csv(bands, f"{cfg.output_dir}/aggregate.csv")
    return curves


# --------------------------------------------------------------------------
# Reading results back, aggregation, export.


def load_curves(paths) -> list[LearningCurve]:
    """Parse curve files written by run_experiment."""
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    curves = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            meta = json.loads(fh.readline())
            if meta.get("schema") != _SCHEMA:
                raise ValueError(f"{path}: unknown schema {meta.get('schema')!r}")
            records = []
            stopped = False
            for line in fh:
                obj = json.loads(line)
                if obj.get("stopped_early"):
                    stopped = True
                    continue
                metrics = MetricsReport(**{m: obj[m] for m in _METRIC_FIELDS})
                records.append(IterationRecord(
                    iteration=obj["iteration"],
                    labeled_count=obj["labeled_count"],
                    metrics=metrics,
                    acquired=tuple(obj["acquired"]),
                    cluster_ids=tuple(obj["cluster_ids"]),
                ))
            params = None
            if meta.get("alpha") is not None:
                params = ScoreParams(meta["alpha"], meta["beta"])
            curves.append(LearningCurve(meta["strategy"], meta["seed"],
                                        tuple(records), params, stopped))
    return curves


@dataclass(frozen=True)
class AggregateBand:
    """Across-seed mean curve with a 95% percentile bootstrap band."""

    metric: str
    checkpoints: tuple[int, ...]
    mean: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    n_curves: int


def aggregate(curves, metric: str = "micro_f1", n_boot: int = 10_000,
              seed: int = 0) -> AggregateBand:
    """Mean and 95% bootstrap band of a metric across replicate curves.

    Whole curves are resampled with replacement (n_boot draws, fixed
    seed); the band is the 2.5/97.5 percentile of resampled means at each
    checkpoint.  Curves must share identical checkpoints.
    """
    curves = list(curves)
    if len(curves) < 2:
        raise ValueError("aggregation needs at least 2 curves")
    checkpoints = curves[0].checkpoints()
    if len(checkpoints) == 0:
        raise ValueError("curves contain no records")
    for c in curves[1:]:
        if c.checkpoints() != checkpoints:
            raise ValueError(
                f"misaligned checkpoints: {c.checkpoints()} vs {checkpoints}"
            )
    values = np.array([c.metric_values(metric) for c in curves])
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(curves), size=(n_boot, len(curves)))
    boot_means = values[draws].mean(axis=1)
    lo, hi = np.percentile(boot_means, [2.5, 97.5], axis=0)
    return AggregateBand(
        metric=metric,
        checkpoints=checkpoints,
        mean=tuple(float(v) for v in values.mean(axis=0)),
        lower=tuple(float(v) for v in lo),
        upper=tuple(float(v) for v in hi),
        n_curves=len(curves),
    )


_CSV_HEADER = "series,metric,labeled,mean,lower,upper"


def _write_plot_csv(bands: dict[str, dict[str, AggregateBand]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_CSV_HEADER + "\n")
        for series in sorted(bands):
            for metric in sorted(bands[series]):
                band = bands[series][metric]
                for i, cp in enumerate(band.checkpoints):
                    fh.write(f"{series},{metric},{cp},{_fmt(band.mean[i])},"
                             f"{_fmt(band.lower[i])},{_fmt(band.upper[i])}\n")


def export_plot_csv(curve_paths, out_path, metrics=("micro_f1",),
                    n_boot: int = 10_000, seed: int = 0) -> None:
    """Group curve files by strategy tag, aggregate each group, and write
    one CSV of mean/lower/upper rows per (series, metric, checkpoint)."""
    curves = load_curves(list(curve_paths))
    groups: dict[str, list[LearningCurve]] = {}
    for c in curves:
        tag = c.strategy
        if c.params is not None:
            tag = f"besra_a{c.params.alpha:g}_b{c.params.beta:g}"
        groups.setdefault(tag, []).append(c)
    bands: dict[str, dict[str, AggregateBand]] = {}
    for tag, group in groups.items():
        bands[tag] = {m: aggregate(group, metric=m, n_boot=n_boot, seed=seed)
                      for m in metrics}
    _write_plot_csv(bands, out_path)
