"""Multi-label evaluation: micro/macro F1, pooled precision/recall, and
top-5 ranking metrics.

Set-based metrics binarize probabilities at a fixed threshold.  All
zero-denominator cases (no predictions, no positives, or both) score 0.
The plain precision and recall fields are micro-pooled over labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricsReport",
    "evaluate",
    "micro_f1",
    "macro_f1",
]

_AT_K = 5


@dataclass(frozen=True)
class MetricsReport:
    """Evaluation summary; every field lies in [0, 1]."""

    micro_f1: float
    macro_f1: float
    precision: float
    recall: float
    precision_at_5: float
    recall_at_5: float

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "precision": self.precision,
            "recall": self.recall,
            "precision_at_5": self.precision_at_5,
            "recall_at_5": self.recall_at_5,
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _f1(tp: float, fp: float, fn: float) -> float:
    return _safe_div(2.0 * tp, 2.0 * tp + fp + fn)


def micro_f1(tp, fp, fn) -> float:
    """F1 from label-pooled true-positive/false-positive/false-negative
    counts; 0 when all counts are 0."""
    if min(tp, fp, fn) < 0:
        raise ValueError("confusion counts must be nonnegative")
    return _f1(float(tp), float(fp), float(fn))


def macro_f1(tp, fp, fn) -> float:
    """Mean of per-label F1 values given per-label count vectors; labels
    with no positives and no predictions contribute 0."""
    tp = np.asarray(tp, dtype=np.float64)
    fp = np.asarray(fp, dtype=np.float64)
    fn = np.asarray(fn, dtype=np.float64)
    if tp.shape != fp.shape or tp.shape != fn.shape:
        raise ValueError("count vectors must share one shape")
    if min(tp.min(), fp.min(), fn.min()) < 0:
        raise ValueError("confusion counts must be nonnegative")
    return float(np.mean([_f1(t, p, n) for t, p, n in zip(tp, fp, fn)]))


def evaluate(pred_probs, true_labels, threshold: float = 0.5) -> MetricsReport:
    """Score predicted probabilities against binary ground truth.

    Thresholds at ``threshold`` for the set-based metrics; the @5 metrics
    use the top min(5, K) probability ranks per instance with probability
    ties broken toward the lower label index.
    """
    probs = np.asarray(pred_probs, dtype=np.float64)
    truth = np.asarray(true_labels)
    if probs.shape != truth.shape or probs.ndim != 2:
        raise ValueError(
            f"need matching 2-d arrays, got {probs.shape} and {truth.shape}"
        )
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if not np.all((truth == 0) | (truth == 1)):
        raise ValueError("ground truth must be binary")
    truth = truth.astype(bool)

    pred = probs >= threshold
    tp = (pred & truth).sum(axis=0).astype(np.float64)
    fp = (pred & ~truth).sum(axis=0).astype(np.float64)
    fn = (~pred & truth).sum(axis=0).astype(np.float64)

    n, k = probs.shape
    ranks = min(_AT_K, k)
    top = np.argsort(-probs, axis=1, kind="stable")[:, :ranks]
    hits = np.take_along_axis(truth, top, axis=1).sum(axis=1).astype(np.float64)
    positives = truth.sum(axis=1).astype(np.float64)
    prec_at = float(np.mean(hits / ranks))
    rec_at = float(np.mean([_safe_div(h, m) for h, m in zip(hits, positives)]))

    return MetricsReport(
        micro_f1=micro_f1(tp.sum(), fp.sum(), fn.sum()),
        macro_f1=macro_f1(tp, fp, fn),
        precision=_safe_div(tp.sum(), tp.sum() + fp.sum()),
        recall=_safe_div(tp.sum(), tp.sum() + fn.sum()),
        precision_at_5=prec_at,
        recall_at_5=rec_at,
    )
