"""Evaluation protocol around a feature ranking.

Builds the ascending/descending stepwise accuracy curves that validate a
ranking, compares the selected subset against the full feature set, and wires
the whole load-train-rank-select-evaluate pipeline together with
deterministic stage seeds.
"""

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from . import dataset as ds_mod
from . import efast, fnn, saliency

# Stage seeds derived from the single run seed.
SPLIT_SEED_OFFSET = 0
TRAIN_SEED_OFFSET = 1
EFAST_SEED_OFFSET = 2
STEPWISE_SEED_OFFSET = 3


@dataclass(frozen=True)
class StepwiseStep:
    """One point of a curve: the subset (in order of addition) and accuracies."""

    features: tuple
    validation_accuracy: float
    test_accuracy: float


@dataclass(frozen=True)
class StepwiseCurve:
    order: str  # "ascending" or "descending"
    steps: tuple


@dataclass(frozen=True)
class ComparisonRow:
    """Full-feature-set vs selected-subset test accuracy, in percent."""

    dataset_name: str
    full_feature_count: int
    full_accuracy: float
    selected_feature_count: int
    selected_accuracy: float


@dataclass(frozen=True)
class PipelineResult:
    split: ds_mod.SplitDataset
    normalization: ds_mod.NormalizationStats
    train_report: fnn.TrainReport
    contribution_report: saliency.ContributionReport
    selection: saliency.SelectionResult
    ascending: StepwiseCurve
    descending: StepwiseCurve
    comparison: ComparisonRow


def _resolve_hidden_units(cfg, n_full_features):
    if cfg.hidden_units is not None:
        return cfg
    return replace(cfg, hidden_units=fnn.default_hidden_units(n_full_features))


def _train_subset(data, features, cfg):
    """Train on a feature subset; columns are sliced in ascending index order
    so the all-features subset reproduces a full run bit-exactly."""
    restricted = ds_mod.restrict_split(data, sorted(features))
    report = fnn.train(restricted, cfg)
    return (
        fnn.accuracy(report.best_params, restricted.validation),
        fnn.accuracy(report.best_params, restricted.test),
    )


def stepwise(data, ranking, order, cfg, workers=1):
    """Grow the feature set one ranked feature at a time and retrain.

    ascending starts from the least salient feature, descending from the most
    salient one. Step t trains a fresh network on the first t features of the
    chosen order, seeded with cfg.seed + t's 0-based index, and records
    validation and test accuracy. Steps are independent and may run on a
    thread pool.
    """
    H = data.train.n_features
    if sorted(ranking) != list(range(H)):
        raise ValueError("ranking must be a permutation of the feature indices")
    if order not in ("ascending", "descending"):
        raise ValueError(f"order must be 'ascending' or 'descending', got {order!r}")
    ordered = list(reversed(ranking)) if order == "ascending" else list(ranking)
    cfg = _resolve_hidden_units(cfg, H)

    def run_step(t):
        features = tuple(ordered[: t + 1])
        step_cfg = replace(cfg, seed=cfg.seed + t)
        try:
            val_acc, test_acc = _train_subset(data, features, step_cfg)
        except Exception as exc:
            raise RuntimeError(f"stepwise {order} failed at step {t + 1}") from exc
        return StepwiseStep(features=features, validation_accuracy=val_acc, test_accuracy=test_acc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            steps = tuple(pool.map(run_step, range(H)))
    else:
        steps = tuple(run_step(t) for t in range(H))
    return StepwiseCurve(order=order, steps=steps)


def compare(data, selection, cfg, dataset_name=""):
    """Test accuracy of a fresh full-feature network vs one on the kept subset.

    Both runs use the same seed, so keeping every feature reproduces the
    full-feature accuracy exactly.
    """
    H = data.train.n_features
    if not selection.kept:
        raise ValueError("selection keeps no features")
    cfg = _resolve_hidden_units(cfg, H)
    _, full_acc = _train_subset(data, range(H), cfg)
    _, sel_acc = _train_subset(data, selection.kept, cfg)
    return ComparisonRow(
        dataset_name=dataset_name,
        full_feature_count=H,
        full_accuracy=100.0 * full_acc,
        selected_feature_count=len(selection.kept),
        selected_accuracy=100.0 * sel_acc,
    )


def run_pipeline(
    raw,
    seed,
    train_cfg=None,
    efast_cfg=None,
    threshold=None,
    top_k=None,
    dataset_name="",
    out_dir=None,
    workers=1,
):
    """Full procedure: encode, split, normalize, train, rank, select, evaluate.

    Stage seeds are derived from the single run seed. At most one of
    threshold / top_k may be given; with neither, the default threshold
    1/(2H) applies. With out_dir set, every artifact is written as soon as
    its stage completes, so a failed run keeps the finished stages' files.
    """
    if threshold is not None and top_k is not None:
        raise ValueError("set at most one of threshold and top_k")
    train_cfg = train_cfg or fnn.TrainConfig()
    efast_cfg = efast_cfg or efast.EfastConfig()
    train_cfg = replace(train_cfg, seed=seed + TRAIN_SEED_OFFSET)
    efast_cfg = replace(efast_cfg, seed=seed + EFAST_SEED_OFFSET)
    out = _ArtifactWriter(out_dir)

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise RuntimeError(f"pipeline stage '{name}' failed: {exc}") from exc

    encoded = stage("encode", lambda: ds_mod.encode(raw))
    split = stage("split", lambda: ds_mod.split(encoded, seed=seed + SPLIT_SEED_OFFSET))
    normalized, stats = stage("normalize", lambda: ds_mod.normalize_split(split))
    train_cfg = _resolve_hidden_units(train_cfg, normalized.train.n_features)

    report = stage("train", lambda: fnn.train(normalized, train_cfg))
    out.model(report.best_params, stats, encoded.feature_names, encoded.class_names)

    space = efast.InputSpace(ranges=normalized.train.feature_ranges)
    contrib = stage(
        "rank",
        lambda: saliency.compute_report(
            report.best_params, space, efast_cfg, encoded.feature_names, workers=workers
        ),
    )
    out.report(contrib)

    if top_k is not None:
        selection = stage("select", lambda: saliency.select_top_k(contrib, top_k))
    else:
        cut = threshold if threshold is not None else saliency.default_threshold(encoded.n_features)
        selection = stage("select", lambda: saliency.select(contrib, cut))
    out.selection(selection, contrib.feature_names)

    stepwise_cfg = replace(train_cfg, seed=seed + STEPWISE_SEED_OFFSET)
    ascending = stage(
        "stepwise-ascending",
        lambda: stepwise(normalized, contrib.ranking, "ascending", stepwise_cfg, workers=workers),
    )
    out.curve(ascending)
    descending = stage(
        "stepwise-descending",
        lambda: stepwise(normalized, contrib.ranking, "descending", stepwise_cfg, workers=workers),
    )
    out.curve(descending)

    comparison = stage(
        "compare",
        lambda: compare(normalized, selection, train_cfg, dataset_name=dataset_name),
    )
    out.comparison([comparison])

    return PipelineResult(
        split=split,
        normalization=stats,
        train_report=report,
        contribution_report=contrib,
        selection=selection,
        ascending=ascending,
        descending=descending,
        comparison=comparison,
    )


def save_curve_csv(curve, path):
    """Plot-ready curve data; feature_added is the 1-based feature index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "n_features", "feature_added", "val_accuracy", "test_accuracy"])
        for t, step in enumerate(curve.steps, start=1):
            writer.writerow(
                [
                    t,
                    len(step.features),
                    step.features[-1] + 1,
                    repr(step.validation_accuracy),
                    repr(step.test_accuracy),
                ]
            )


def load_curve_csv(path, order):
    """Re-parse a curve written by save_curve_csv.

    Only the incremental feature per step is stored on disk, so the subsets
    are rebuilt from the addition order.
    """
    steps = []
    prefix = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            prefix.append(int(row["feature_added"]) - 1)
            steps.append(
                StepwiseStep(
                    features=tuple(prefix),
                    validation_accuracy=float(row["val_accuracy"]),
                    test_accuracy=float(row["test_accuracy"]),
                )
            )
    return StepwiseCurve(order=order, steps=tuple(steps))


def save_comparison_json(rows, path):
    doc = [
        {
            "dataset": r.dataset_name,
            "full_feature_count": r.full_feature_count,
            "full_accuracy": r.full_accuracy,
            "selected_feature_count": r.selected_feature_count,
            "selected_accuracy": r.selected_accuracy,
        }
        for r in rows
    ]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_comparison_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [
        ComparisonRow(
            dataset_name=d["dataset"],
            full_feature_count=d["full_feature_count"],
            full_accuracy=d["full_accuracy"],
            selected_feature_count=d["selected_feature_count"],
            selected_accuracy=d["selected_accuracy"],
        )
        for d in doc
    ]


class _ArtifactWriter:
    """Persists pipeline artifacts into out_dir; inert when out_dir is None."""

    def __init__(self, out_dir):
        self.dir = out_dir
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)

    def _path(self, name):
        return os.path.join(self.dir, name)

    def model(self, params, stats, feature_names, class_names):
        if self.dir is not None:
            fnn.save_model(self._path("model.json"), params, stats, feature_names, class_names)

    def report(self, contrib):
        if self.dir is not None:
            saliency.save_report_json(contrib, self._path("report.json"))
            saliency.save_report_csv(contrib, self._path("report.csv"))

    def selection(self, sel, feature_names):
        if self.dir is not None:
            saliency.save_selection_json(sel, feature_names, self._path("selection.json"))

    def curve(self, curve):
        if self.dir is not None:
            save_curve_csv(curve, self._path(f"curve_{curve.order}.csv"))

    def comparison(self, rows):
        if self.dir is not None:
            save_comparison_json(rows, self._path("comparison.json"))
