"""Binary-relevance linear classifiers and deep-ensemble construction.

Each label gets an independent linear model with a logistic link, trained
jointly (one weight matrix) by full-batch gradient descent on binary
cross-entropy plus an L2 penalty.  A backtracking rule halves the step
whenever a step would increase the loss, so the recorded loss curve is
nonincreasing.  Ensembles are built by retraining the same configuration
under different seeds; with a finite epoch budget the members disagree
most where the data say least, which is what the acquisition step needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import MultiLabelDataset
from .ensemble import EnsembleProbs, EnsembleWeights, uniform_weights

__all__ = [
    "TrainConfig",
    "BRLinearModel",
    "bce_l2_loss_grad",
    "train",
    "predict_probs",
    "train_ensemble",
    "ensemble_probs",
    "save_model",
    "load_model",
]

_PROB_FLOOR = 1e-12
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run."""

    learning_rate: float = 0.5
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")


def bce_l2_loss_grad(weights, biases, features, labels, l2):
    """Mean binary cross-entropy over instances (summed over labels) plus
    (l2/2)·||weights||²; biases are not penalized.

    Returns (loss, grad_weights, grad_biases).  The per-element loss is
    written as logaddexp(0, z) − y·z, which is exact and overflow-free.
    """
    W = np.asarray(weights, dtype=np.float64)
    b = np.asarray(biases, dtype=np.float64)
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(labels, dtype=np.float64)
    n = X.shape[0]
    z = X @ W.T + b
    loss = float(np.logaddexp(0.0, z).sum() - (Y * z).sum()) / n
    loss += 0.5 * l2 * float((W * W).sum())
    resid = (expit(z) - Y) / n
    grad_w = resid.T @ X + l2 * W
    grad_b = resid.sum(axis=0)
    return loss, grad_w, grad_b


class BRLinearModel(BaseEstimator):
    """Per-label linear classifier with a shared training loop.

    Follows the usual estimator protocol: hyperparameters in __init__,
    learned state in trailing-underscore attributes after fit.

    Attributes after fit:
        weights_: (n_labels, n_features) weight matrix.
        biases_: (n_labels,) intercepts.
        loss_curve_: per-epoch training loss, index 0 being the loss at
            initialization; nonincreasing by construction.
    """

    def __init__(self, learning_rate: float = 0.5, epochs: int = 200,
                 l2: float = 1e-4, seed: int = 0):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.seed = seed

    def fit(self, X, Y):
        cfg = TrainConfig(self.learning_rate, self.epochs, self.l2, self.seed)
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise ValueError(f"incompatible shapes {X.shape} and {Y.shape}")
        if X.shape[0] == 0:
            raise ValueError("cannot train on an empty dataset")
        n_labels, dim = Y.shape[1], X.shape[1]
        rng = np.random.default_rng(cfg.seed)
        bound = 1.0 / np.sqrt(dim)
        W = rng.uniform(-bound, bound, size=(n_labels, dim))
        b = np.zeros(n_labels)

        loss, grad_w, grad_b = bce_l2_loss_grad(W, b, X, Y, cfg.l2)
        losses = [loss]
        step = cfg.learning_rate
        for _ in range(cfg.epochs):
            while True:
                W_new = W - step * grad_w
                b_new = b - step * grad_b
                trial = bce_l2_loss_grad(W_new, b_new, X, Y, cfg.l2)
                if trial[0] <= loss or step < _MIN_STEP:
                    break
                step *= 0.5
            W, b = W_new, b_new
            loss, grad_w, grad_b = trial
            losses.append(loss)

        self.weights_ = W
        self.biases_ = b
        self.loss_curve_ = losses
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "weights_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.weights_.shape[1]:
            raise ValueError(
                f"expected {self.weights_.shape[1]} features, got {X.shape[1]}"
            )
        p = expit(X @ self.weights_.T + self.biases_)
        return np.clip(p, _PROB_FLOOR, 1.0 - _PROB_FLOOR)

    def predict(self, X, threshold: float = 0.5):
        return (self.predict_proba(X) >= threshold).astype(np.int8)


def train(labeled: MultiLabelDataset, cfg: TrainConfig) -> BRLinearModel:
    """Train one classifier on a labeled dataset."""
    model = BRLinearModel(cfg.learning_rate, cfg.epochs, cfg.l2, cfg.seed)
    return model.fit(labeled.features, labeled.labels)


def predict_probs(model: BRLinearModel, instances) -> np.ndarray:
    """Per-instance vector of P(label=1) for each label."""
    return model.predict_proba(instances)


def train_ensemble(
    labeled: MultiLabelDataset,
    cfg: TrainConfig,
    n_members: int = 5,
    *,
    pool_features,
    member_seeds=None,
) -> tuple[EnsembleProbs, EnsembleWeights, list[BRLinearModel]]:
    """Train n_members classifiers that differ only in their derived seeds
    and tabulate their probabilities over the given pool.

    Returns the (members, pool, labels) probability tensor, uniform prior
    weights, and the trained members themselves (so callers can evaluate
    them on other splits).  member_seeds overrides the default derivation
    cfg.seed -> [cfg.seed, e]; passing equal seeds yields identical members,
    which is useful for degenerate-ensemble checks.
    """
    if n_members < 2:
        raise ValueError(f"an ensemble needs at least 2 members, got {n_members}")
    if member_seeds is None:
        member_seeds = [
            int(np.random.SeedSequence([cfg.seed, e]).generate_state(1)[0])
            for e in range(n_members)
        ]
    elif len(member_seeds) != n_members:
        raise ValueError(
            f"expected {n_members} member seeds, got {len(member_seeds)}"
        )
    models = [
        train(labeled, TrainConfig(cfg.learning_rate, cfg.epochs, cfg.l2, s))
        for s in member_seeds
    ]
    return ensemble_probs(models, pool_features), uniform_weights(n_members), models


def ensemble_probs(models, features) -> EnsembleProbs:
    """Stack member probability tables over a feature matrix."""
    return EnsembleProbs(np.stack([m.predict_proba(features) for m in models]))


# --------------------------------------------------------------------------
# Checkpoint format: a versioned text dump, one whitespace-separated row of
# weights per label followed by one row of biases, floats in shortest
# round-trip form.

def save_model(model: BRLinearModel, path) -> None:
    check_is_fitted(model, "weights_")
    k, d = model.weights_.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#brlinear-v1 k={k} d={d}\n")
        for row in model.weights_:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        fh.write(" ".join(repr(float(v)) for v in model.biases_) + "\n")


def load_model(path) -> BRLinearModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        m = re.match(r"^#brlinear-v1 k=(\d+) d=(\d+)$", header)
        if m is None:
            raise ValueError(f"malformed checkpoint header {header!r}")
        k, d = int(m.group(1)), int(m.group(2))
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != k + 1 or any(len(r) != d for r in rows[:k]) or len(rows[k]) != k:
        raise ValueError("checkpoint body does not match its header dimensions")
    model = BRLinearModel()
    model.weights_ = np.array([[float(v) for v in r] for r in rows[:k]])
    model.biases_ = np.array([float(v) for v in rows[k]])
    model.loss_curve_ = []
    return model
