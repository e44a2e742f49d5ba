"""Command-line entry points: dataset generation, experiment runs,
aggregation, and plot-data export.

Exit codes: 0 on success, 2 on usage errors (unknown flags or
subcommands), 1 on any runtime failure, with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .data import generate_synthetic, mean_ir, save_dataset
from .harness import (
    AggregateBand,
    ExperimentConfig,
    aggregate,
    export_plot_csv,
    load_curves,
    run_experiment,
)

_METRICS = ("micro_f1", "macro_f1", "precision", "recall",
            "precision_at_5", "recall_at_5")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besra",
        description="Batch active learning for imbalanced multi-label "
                    "classification: data generation, experiment runs, and "
                    "result aggregation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a synthetic train/test pair")
    gen.add_argument("--n-train", type=int, default=1200)
    gen.add_argument("--n-test", type=int, default=600)
    gen.add_argument("--target-mean-ir", type=float, required=True,
                     help="imbalance target for the train split")
    gen.add_argument("--test-mean-ir", type=float, default=50.0)
    gen.add_argument("--n-labels", type=int, default=10)
    gen.add_argument("--dim", type=int, default=50)
    gen.add_argument("--noise", type=float, default=0.15)
    gen.add_argument("--feature-scale", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, help="config file path")
    run.add_argument("--out", help="override the config's output directory")
    run.add_argument("--seed", type=int,
                     help="run only this replicate seed instead of the "
                          "config's list")
    run.add_argument("--verbose", action="store_true",
                     help="log per-iteration progress to stderr")

    agg = sub.add_parser("aggregate",
                         help="mean curve and 95%% bootstrap band from curve files")
    agg.add_argument("curves", nargs="+", help="curve files of one series")
    agg.add_argument("--metric", default="micro_f1", choices=_METRICS)
    agg.add_argument("--bootstrap-seed", type=int, default=0)
    agg.add_argument("--out", required=True, help="output JSON path")

    exp = sub.add_parser("export-plot",
                         help="per-figure CSV of mean and band per strategy")
    exp.add_argument("curves", nargs="+", help="curve files, any mix of series")
    exp.add_argument("--metric", action="append", choices=_METRICS,
                     help="metric column(s); repeatable, default micro_f1")
    exp.add_argument("--bootstrap-seed", type=int, default=0)
    exp.add_argument("--out", required=True, help="output CSV path")
    return parser


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _band_json(band: AggregateBand) -> str:
    def seq(values, fmt):
        return "[" + ",".join(fmt(v) for v in values) + "]"

    return ("{" + ",".join([
        f'"metric":{json.dumps(band.metric)}',
        f'"n_curves":{band.n_curves}',
        f'"checkpoints":{seq(band.checkpoints, str)}',
        f'"mean":{seq(band.mean, _fmt)}',
        f'"lower":{seq(band.lower, _fmt)}',
        f'"upper":{seq(band.upper, _fmt)}',
    ]) + "}")


def _cmd_gen_data(args) -> int:
    train, test = generate_synthetic(
        args.n_train, args.n_test, args.target_mean_ir,
        n_labels=args.n_labels, dim=args.dim, test_mean_ir=args.test_mean_ir,
        noise=args.noise, feature_scale=args.feature_scale, seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    train_path = os.path.join(args.out, "train.txt")
    test_path = os.path.join(args.out, "test.txt")
    save_dataset(train, train_path)
    save_dataset(test, test_path)
    print(f"wrote {train_path} ({train.n_instances} instances, "
          f"MeanIR {mean_ir(train.labels).mean_ir:.2f})")
    print(f"wrote {test_path} ({test.n_instances} instances, "
          f"MeanIR {mean_ir(test.labels).mean_ir:.2f})")
    return 0


def _cmd_run(args) -> int:
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(message)s")
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.seed is not None:
        raw["seeds"] = [args.seed]
    cfg = ExperimentConfig.from_dict(raw)
    curves = run_experiment(cfg)
    for curve in curves:
        last = curve.records[-1] if curve.records else None
        desc = (f"{last.labeled_count} labeled, micro_f1 "
                f"{last.metrics.micro_f1:.4f}") if last else "no records"
        print(f"{cfg.strategy_tag} seed {curve.seed}: {desc}"
              + (" [stopped early]" if curve.stopped_early else ""))
    print(f"results in {cfg.output_dir}")
    return 0


def _cmd_aggregate(args) -> int:
    curves = load_curves(args.curves)
    band = aggregate(curves, metric=args.metric, seed=args.bootstrap_seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(_band_json(band) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_export_plot(args) -> int:
    metrics = tuple(args.metric) if args.metric else ("micro_f1",)
    export_plot_csv(args.curves, args.out, metrics=metrics,
                    seed=args.bootstrap_seed)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "run": _cmd_run,
    "aggregate": _cmd_aggregate,
    "export-plot": _cmd_export_plot,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"besra: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
