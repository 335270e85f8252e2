"""Feature ranking and selection via variance decomposition of a trained classifier."""

from .dataset import (
    Dataset,
    NormalizationStats,
    RawTable,
    SplitDataset,
    apply_normalizer,
    encode,
    fit_normalizer,
    load_csv,
    normalize_split,
    split,
)
from .efast import EfastConfig, EfastPlan, InputSpace, SensitivityEstimate, total_effects
from .fnn import NetworkParams, TrainConfig, TrainReport, accuracy, train
from .saliency import (
    ContributionReport,
    SelectionResult,
    compute_report,
    per_output_model,
    select,
    select_top_k,
)
from .experiment import ComparisonRow, StepwiseCurve, compare, run_pipeline, stepwise

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "NormalizationStats",
    "RawTable",
    "SplitDataset",
    "apply_normalizer",
    "encode",
    "fit_normalizer",
    "load_csv",
    "normalize_split",
    "split",
    "EfastConfig",
    "EfastPlan",
    "InputSpace",
    "SensitivityEstimate",
    "total_effects",
    "NetworkParams",
    "TrainConfig",
    "TrainReport",
    "accuracy",
    "train",
    "ContributionReport",
    "SelectionResult",
    "compute_report",
    "per_output_model",
    "select",
    "select_top_k",
    "ComparisonRow",
    "StepwiseCurve",
    "compare",
    "run_pipeline",
    "stepwise",
]
