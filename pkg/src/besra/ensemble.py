"""Ensemble-as-posterior machinery.

A deep ensemble stands in for the model posterior: each member carries a
weight, predictions are weight-mixtures of member predictions, and
conditioning on a hypothesized label is a Bayes reweighting of the members
(the members themselves never change).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnsembleProbs",
    "EnsembleWeights",
    "DegenerateEvidenceError",
    "uniform_weights",
    "predictive",
    "reweight",
    "updated_predictive",
]

_WEIGHT_TOL = 1e-12


class DegenerateEvidenceError(ValueError):
    """Raised when a hypothesized label has zero likelihood under every
    member that carries weight, so the posterior update is undefined."""


@dataclass(frozen=True)
class EnsembleProbs:
    """Per-member positive-label probabilities, shape (members, instances, labels)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"expected a (members, instances, labels) tensor, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("an ensemble needs at least 2 members")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def n_members(self) -> int:
        return self.probs.shape[0]

    @property
    def n_instances(self) -> int:
        return self.probs.shape[1]

    @property
    def n_labels(self) -> int:
        return self.probs.shape[2]


@dataclass(frozen=True)
class EnsembleWeights:
    """Nonnegative member weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(arr.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 (got {arr.sum()!r})")
        arr.flags.writeable = False
        object.__setattr__(self, "weights", arr)

    def __len__(self) -> int:
        return self.weights.shape[0]


def uniform_weights(size: int) -> EnsembleWeights:
    if size < 2:
        raise ValueError("an ensemble needs at least 2 members")
    return EnsembleWeights(np.full(size, 1.0 / size))


def _as_weight_array(weights) -> np.ndarray:
    return weights.weights if isinstance(weights, EnsembleWeights) else np.asarray(weights, float)


def predictive(weights: EnsembleWeights, probs_at) -> np.ndarray:
    """Mixture prediction at one instance: sum_e w_e * p_e, per label.

    ``probs_at`` is the (members, labels) slice of an :class:`EnsembleProbs`
    at a single instance.
    """
    w = _as_weight_array(weights)
    p = np.asarray(probs_at, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != w.shape[0]:
        raise ValueError(
            f"expected a ({w.shape[0]}, labels) slice, got shape {p.shape}"
        )
    return w @ p


def reweight(weights: EnsembleWeights, likelihoods) -> EnsembleWeights:
    """Bayes update of member weights given each member's likelihood of one
    hypothesized label observation: w'_e proportional to w_e * l_e."""
    w = _as_weight_array(weights)
    lik = np.asarray(likelihoods, dtype=np.float64)
    if lik.shape != w.shape:
        raise ValueError(f"likelihood vector shape {lik.shape} != weights shape {w.shape}")
    if np.any(lik < 0.0) or np.any(lik > 1.0):
        raise ValueError("likelihoods must lie in [0, 1]")
    unnorm = w * lik
    z = unnorm.sum()
    if z <= 0.0:
        raise DegenerateEvidenceError(
            "hypothesized label has zero probability under the entire ensemble"
        )
    return EnsembleWeights(unnorm / z)


def updated_predictive(weights: EnsembleWeights, probs_at_xprime, likelihoods) -> float:
    """Posterior-predictive probability at another instance after
    conditioning on a hypothesized label: predictive under the reweighted
    ensemble."""
    w_post = reweight(weights, likelihoods)
    p = np.asarray(probs_at_xprime, dtype=np.float64).reshape(-1)
    if p.shape[0] != len(w_post):
        raise ValueError(f"expected one probability per member, got shape {p.shape}")
    return float(w_post.weights @ p)
