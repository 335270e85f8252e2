"""Feature saliency of a trained classifier via variance decomposition.

The classifier is viewed as K scalar models, one per class-probability
output. Each model's output variance is apportioned to the input features
with the Fourier-based estimator; summing a feature's total effects across
the K outputs and normalizing yields its contribution share, which induces
the ranking used for selection.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import efast
from .fnn import predict_proba


@dataclass(frozen=True)
class ContributionReport:
    """Per-feature saliency summary.

    te_matrix[h, k] is the total effect of feature h on the class-k output;
    s_total is its row sum, contributions the normalized shares (fractions
    summing to 1), ranking the feature indices sorted by contribution
    descending with ties broken by ascending index.
    """

    te_matrix: np.ndarray
    s_total: np.ndarray
    contributions: np.ndarray
    ranking: tuple
    feature_names: tuple
    flags: tuple = ()


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a threshold or top-k cut, in ranking order."""

    kept: tuple
    dropped: tuple
    threshold: float


def default_threshold(n_features):
    """Half the uniform share; features clearly below average are dropped."""
    return 1.0 / (2.0 * n_features)


def per_output_model(params, k):
    """Scalar model mapping an input vector to the class-k probability.

    Accepts a single length-H vector or an (n, H) matrix of inputs.
    """
    if not 0 <= k < params.n_classes:
        raise ValueError(f"class index {k} out of range")

    def model(x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return float(predict_proba(params, x[None, :])[0, k])
        return predict_proba(params, x)[:, k]

    return model


def compute_report(params, space, cfg, feature_names, workers=1):
    """Estimate the full H x K total-effect matrix and rank the features.

    If every per-output model is constant over the sampled space (all total
    effects zero), contributions fall back to the uniform 1/H with a
    "zero-total" diagnostic flag.
    """
    H = space.n_factors
    if H != params.n_inputs:
        raise ValueError("input space arity does not match the network")
    te = np.empty((H, params.n_classes))
    for k in range(params.n_classes):
        te[:, k] = efast.total_effects(per_output_model(params, k), space, cfg, workers=workers)
    s_total = te.sum(axis=1)
    grand = s_total.sum()
    flags = ()
    if grand > 0:
        contributions = s_total / grand
    else:
        contributions = np.full(H, 1.0 / H)
        flags = ("zero-total",)
    ranking = tuple(int(i) for i in np.lexsort((np.arange(H), -contributions)))
    return ContributionReport(
        te_matrix=te,
        s_total=s_total,
        contributions=contributions,
        ranking=ranking,
        feature_names=tuple(feature_names),
        flags=flags,
    )


def select(report, threshold):
    """Keep every feature whose contribution is at least the threshold.

    kept and dropped preserve ranking order. A threshold at or above the
    maximum contribution would drop everything and is rejected.
    """
    contributions = report.contributions
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if threshold > contributions.max():
        raise ValueError(
            f"threshold {threshold} exceeds the largest contribution "
            f"{contributions.max():.6f}; nothing would be kept"
        )
    kept = tuple(h for h in report.ranking if contributions[h] >= threshold)
    dropped = tuple(h for h in report.ranking if contributions[h] < threshold)
    if not kept:
        raise ValueError("threshold would drop every feature")
    return SelectionResult(kept=kept, dropped=dropped, threshold=float(threshold))


def select_top_k(report, k):
    """Keep the k best-ranked features.

    The stored threshold is the k-th largest contribution, so the result
    matches select() at that value whenever it is unique.
    """
    H = len(report.ranking)
    if not 1 <= k <= H:
        raise ValueError(f"k must be in [1, {H}]")
    kept = report.ranking[:k]
    dropped = report.ranking[k:]
    return SelectionResult(kept=kept, dropped=dropped, threshold=float(report.contributions[kept[-1]]))


def report_as_dict(report):
    """JSON-ready view of a report. Feature indices are presented 1-based."""
    return {
        "feature_names": list(report.feature_names),
        "te_matrix": report.te_matrix.tolist(),
        "s_total": report.s_total.tolist(),
        "contributions": report.contributions.tolist(),
        "contribution_percent": (100.0 * report.contributions).tolist(),
        "ranking": [h + 1 for h in report.ranking],
        "flags": list(report.flags),
    }


def save_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report_as_dict(report), fh, indent=2)
        fh.write("\n")


def save_report_csv(report, path):
    """Two-column bar-chart data: one row per feature, in feature order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "contribution_percent"])
        for name, c in zip(report.feature_names, report.contributions):
            writer.writerow([name, repr(100.0 * float(c))])


def load_report_json(path):
    """Re-parse a report written by save_report_json."""
    with open(path) as fh:
        doc = json.load(fh)
    return ContributionReport(
        te_matrix=np.array(doc["te_matrix"]),
        s_total=np.array(doc["s_total"]),
        contributions=np.array(doc["contributions"]),
        ranking=tuple(h - 1 for h in doc["ranking"]),
        feature_names=tuple(doc["feature_names"]),
        flags=tuple(doc["flags"]),
    )


def save_selection_json(selection, feature_names, path):
    doc = {
        "kept": [h + 1 for h in selection.kept],
        "kept_names": [feature_names[h] for h in selection.kept],
        "dropped": [h + 1 for h in selection.dropped],
        "threshold": selection.threshold,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_selection_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    return SelectionResult(
        kept=tuple(h - 1 for h in doc["kept"]),
        dropped=tuple(h - 1 for h in doc["dropped"]),
        threshold=doc["threshold"],
    )
