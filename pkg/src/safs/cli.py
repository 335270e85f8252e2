"""Command-line surface: inspect, train, rank, select, stepwise, reproduce.

All randomness flows from the single --seed flag; stage seeds are derived
from it with the fixed offsets in the experiment module, so rerunning any
command with the same arguments writes byte-identical artifacts.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace

from . import dataset as ds_mod
from . import efast, experiment, fnn, saliency

STAGES = ("inspect", "train", "rank", "select", "stepwise", "reproduce")


@dataclass
class RunConfig:
    subcommand: str
    data_path: str
    label: str
    seed: int
    out_dir: str
    has_header: bool
    delimiter: str
    drop: list
    train_cfg: fnn.TrainConfig
    efast_cfg: efast.EfastConfig
    threshold: float | None
    top_k: int | None
    workers: int
    name: str


def parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="safs",
        description="Rank features of a classification dataset by their contribution "
        "to a trained network's output variance, then select and validate a subset.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="|".join(STAGES))
    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the pipeline through the {stage} stage")
        p.add_argument("data", help="path to a delimiter-separated data file")
        p.add_argument("--label", required=True, help="label column name or 0-based index")
        p.add_argument("--no-header", action="store_true", help="file has no header row")
        p.add_argument(
            "--delimiter",
            default=",",
            help="cell delimiter; the literal word 'whitespace' splits on any run of spaces",
        )
        p.add_argument(
            "--drop-columns",
            default="",
            help="comma-separated column names or indices to discard before encoding",
        )
        p.add_argument("--seed", type=int, default=0, help="master seed for every stage")
        p.add_argument("--out", default="safs_out", help="directory for artifact files")
        p.add_argument("--hidden-units", type=int, default=None)
        p.add_argument("--learning-rate", type=float, default=0.1)
        p.add_argument("--patience", type=int, default=20)
        p.add_argument("--max-epochs", type=int, default=500)
        p.add_argument("--efast-samples", type=int, default=1025)
        p.add_argument("--efast-harmonics", type=int, default=4)
        p.add_argument("--efast-resamples", type=int, default=2)
        group = p.add_mutually_exclusive_group()
        group.add_argument("--threshold", type=float, default=None, help="minimum contribution to keep")
        group.add_argument("--top-k", type=int, default=None, help="keep the k best-ranked features")
        p.add_argument("--workers", type=int, default=1, help="max concurrent sweeps/trainings")
        p.add_argument("--name", default="", help="dataset name used in summary rows")

    args = parser.parse_args(argv)
    try:
        train_cfg = fnn.TrainConfig(
            hidden_units=args.hidden_units,
            learning_rate=args.learning_rate,
            patience_epochs=args.patience,
            max_epochs=args.max_epochs,
            seed=args.seed,
        )
        efast_cfg = efast.EfastConfig(
            samples_per_curve=args.efast_samples,
            max_harmonic=args.efast_harmonics,
            resamples=args.efast_resamples,
            seed=args.seed,
        )
    except ValueError as exc:
        parser.error(str(exc))
    if args.seed < 0:
        parser.error("--seed must be a nonnegative integer")
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    return RunConfig(
        subcommand=args.subcommand,
        data_path=args.data,
        label=args.label,
        seed=args.seed,
        out_dir=args.out,
        has_header=not args.no_header,
        delimiter=None if args.delimiter == "whitespace" else args.delimiter,
        drop=[c for c in args.drop_columns.split(",") if c],
        train_cfg=train_cfg,
        efast_cfg=efast_cfg,
        threshold=args.threshold,
        top_k=args.top_k,
        workers=args.workers,
        name=args.name or os.path.splitext(os.path.basename(args.data))[0],
    )


def _load(cfg):
    raw = ds_mod.load_csv(
        cfg.data_path, cfg.label, has_header=cfg.has_header, delimiter=cfg.delimiter
    )
    if cfg.drop:
        raw = ds_mod.drop_columns(raw, cfg.drop)
    return raw


def run(cfg):
    """Execute the selected stage(s); returns the process exit status."""
    try:
        return _dispatch(cfg)
    except Exception as exc:
        print(f"safs: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(cfg):
    raw = _load(cfg)
    if cfg.subcommand == "inspect":
        encoded = ds_mod.encode(raw)
        split = ds_mod.split(encoded, seed=cfg.seed + experiment.SPLIT_SEED_OFFSET)
        print(json.dumps(ds_mod.summarize(split, name=cfg.name), indent=2))
        return 0

    if cfg.subcommand == "reproduce":
        result = experiment.run_pipeline(
            raw,
            seed=cfg.seed,
            train_cfg=cfg.train_cfg,
            efast_cfg=cfg.efast_cfg,
            threshold=cfg.threshold,
            top_k=cfg.top_k,
            dataset_name=cfg.name,
            out_dir=cfg.out_dir,
            workers=cfg.workers,
        )
        _print_training(result.train_report)
        _print_ranking(result.contribution_report)
        _print_selection(result.selection, result.contribution_report.feature_names)
        _print_comparison(result.comparison)
        print(f"artifacts written to {cfg.out_dir}/")
        return 0

    # The remaining stages share a common prefix of the pipeline.
    os.makedirs(cfg.out_dir, exist_ok=True)
    encoded = ds_mod.encode(raw)
    split = ds_mod.split(encoded, seed=cfg.seed + experiment.SPLIT_SEED_OFFSET)
    normalized, stats = ds_mod.normalize_split(split)
    train_cfg = replace(cfg.train_cfg, seed=cfg.seed + experiment.TRAIN_SEED_OFFSET)
    if train_cfg.hidden_units is None:
        train_cfg = replace(train_cfg, hidden_units=fnn.default_hidden_units(encoded.n_features))
    report = fnn.train(normalized, train_cfg)
    fnn.save_model(
        os.path.join(cfg.out_dir, "model.json"),
        report.best_params,
        stats,
        encoded.feature_names,
        encoded.class_names,
    )
    _print_training(report)
    test_acc = fnn.accuracy(report.best_params, normalized.test)
    print(f"test accuracy (all {encoded.n_features} features): {100.0 * test_acc:.2f}%")
    if cfg.subcommand == "train":
        print(f"artifacts written to {cfg.out_dir}/")
        return 0

    efast_cfg = replace(cfg.efast_cfg, seed=cfg.seed + experiment.EFAST_SEED_OFFSET)
    space = efast.InputSpace(ranges=normalized.train.feature_ranges)
    contrib = saliency.compute_report(
        report.best_params, space, efast_cfg, encoded.feature_names, workers=cfg.workers
    )
    saliency.save_report_json(contrib, os.path.join(cfg.out_dir, "report.json"))
    saliency.save_report_csv(contrib, os.path.join(cfg.out_dir, "report.csv"))
    _print_ranking(contrib)
    if cfg.subcommand == "rank":
        print(f"artifacts written to {cfg.out_dir}/")
        return 0

    if cfg.subcommand == "select":
        if cfg.top_k is not None:
            selection = saliency.select_top_k(contrib, cfg.top_k)
        else:
            cut = cfg.threshold if cfg.threshold is not None else saliency.default_threshold(encoded.n_features)
            selection = saliency.select(contrib, cut)
        saliency.save_selection_json(
            selection, contrib.feature_names, os.path.join(cfg.out_dir, "selection.json")
        )
        _print_selection(selection, contrib.feature_names)
        print(f"artifacts written to {cfg.out_dir}/")
        return 0

    # stepwise
    stepwise_cfg = replace(train_cfg, seed=cfg.seed + experiment.STEPWISE_SEED_OFFSET)
    for order in ("ascending", "descending"):
        curve = experiment.stepwise(normalized, contrib.ranking, order, stepwise_cfg, workers=cfg.workers)
        experiment.save_curve_csv(curve, os.path.join(cfg.out_dir, f"curve_{order}.csv"))
        final = curve.steps[-1]
        print(
            f"{order} curve: {len(curve.steps)} steps, final test accuracy "
            f"{100.0 * final.test_accuracy:.2f}%"
        )
    print(f"artifacts written to {cfg.out_dir}/")
    return 0


def _print_training(report):
    print(
        f"training: {report.epochs_run} epochs, best validation cross-entropy "
        f"{report.best_validation_ce:.4f}"
    )


def _print_ranking(contrib):
    print("feature ranking (contribution %):")
    for h in contrib.ranking:
        print(f"  {h + 1:>3} {contrib.feature_names[h]:<24} {100.0 * contrib.contributions[h]:6.2f}")


def _print_selection(selection, feature_names):
    names = ", ".join(feature_names[h] for h in selection.kept)
    print(f"kept {len(selection.kept)} features (threshold {selection.threshold:.4f}): {names}")


def _print_comparison(row):
    print(f"{'dataset':<14}{'features':>9}{'accuracy %':>12}{'selected':>10}{'accuracy %':>12}")
    print(
        f"{row.dataset_name:<14}{row.full_feature_count:>9}{row.full_accuracy:>12.2f}"
        f"{row.selected_feature_count:>10}{row.selected_accuracy:>12.2f}"
    )


def main(argv=None):
    sys.exit(run(parse_args(argv if argv is not None else sys.argv[1:])))


if __name__ == "__main__":
    main()
