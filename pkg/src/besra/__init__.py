"""Batch active learning for imbalanced multi-label classification.

The engine scores unlabeled candidates by the expected improvement of a
Beta-family proper scoring rule under Bayesian reweighting of a deep
ensemble, then picks diverse batches by clustering the score-change
vectors.  A deterministic harness reproduces the imbalance study on
synthetic datasets at desk scale.
"""

from .acquisition import (
    AcquisitionVector,
    BatchSelection,
    EstimationPool,
    delta_q_vector,
    random_acquire,
    score_pool,
    select_batch,
    uncertainty_acquire,
)
from .data import (
    DatasetFormatError,
    ImbalanceReport,
    InfeasibleImbalanceError,
    MultiLabelDataset,
    generate_synthetic,
    load_dataset,
    mean_ir,
    save_dataset,
)
from .ensemble import (
    DegenerateEvidenceError,
    EnsembleProbs,
    EnsembleWeights,
    predictive,
    reweight,
    uniform_weights,
    updated_predictive,
)
from .harness import (
    AggregateBand,
    ExperimentConfig,
    GenerateSpec,
    IterationRecord,
    LearningCurve,
    aggregate,
    export_plot_csv,
    load_curves,
    run_experiment,
)
from .metrics import MetricsReport, evaluate, macro_f1, micro_f1
from .models import (
    BRLinearModel,
    TrainConfig,
    bce_l2_loss_grad,
    ensemble_probs,
    load_model,
    predict_probs,
    save_model,
    train,
    train_ensemble,
)
from .scoring import (
    BRIER_SCORE,
    LOG_SCORE,
    ScoreParams,
    beta_score,
    br_score,
    expected_score,
    regularized_incomplete_beta,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionVector",
    "AggregateBand",
    "BatchSelection",
    "BRIER_SCORE",
    "BRLinearModel",
    "DatasetFormatError",
    "DegenerateEvidenceError",
    "EnsembleProbs",
    "EnsembleWeights",
    "EstimationPool",
    "ExperimentConfig",
    "GenerateSpec",
    "ImbalanceReport",
    "InfeasibleImbalanceError",
    "IterationRecord",
    "LOG_SCORE",
    "LearningCurve",
    "MetricsReport",
    "MultiLabelDataset",
    "ScoreParams",
    "TrainConfig",
    "aggregate",
    "bce_l2_loss_grad",
    "beta_score",
    "br_score",
    "delta_q_vector",
    "ensemble_probs",
    "evaluate",
    "expected_score",
    "export_plot_csv",
    "generate_synthetic",
    "load_curves",
    "load_dataset",
    "load_model",
    "macro_f1",
    "mean_ir",
    "micro_f1",
    "predict_probs",
    "predictive",
    "random_acquire",
    "regularized_incomplete_beta",
    "reweight",
    "run_experiment",
    "save_dataset",
    "save_model",
    "score_pool",
    "select_batch",
    "train",
    "train_ensemble",
    "uncertainty_acquire",
    "uniform_weights",
    "updated_predictive",
    "__version__",
]
