"""Acquisition: expected-score-change vectors and diverse batch selection.

For every unlabeled candidate x the engine asks: if an annotator revealed
one label of x, how much would the ensemble's expected score improve over
a reference pool of points x'?  Hypothesizing each binary outcome of each
label reweights the ensemble by Bayes rule; the improvement is measured
per pool point with a proper scoring rule and accumulated over labels and
outcomes into the candidate's acquisition vector.  Strict propriety makes
every entry nonnegative up to floating error.

Batches are then chosen by clustering the vectors with k-Means (k = batch
size, k-Means++ seeding) and taking, per centroid, the nearest candidate
not already taken.  Random and mean-entropy strategies are provided as
baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import DegenerateEvidenceError, EnsembleProbs, EnsembleWeights
from .scoring import ScoreParams, beta_score

__all__ = [
    "EstimationPool",
    "AcquisitionVector",
    "BatchSelection",
    "delta_q_vector",
    "score_pool",
    "select_batch",
    "random_acquire",
    "uncertainty_acquire",
]

_SCORE_FLOOR = 1e-12  # keeps log-family scores finite inside the vectors
_NEG_TOL = -1e-9
_CHUNK = 64

_KMEANS_MAX_ITER = 300
_KMEANS_MOVE_TOL = 1e-6


@dataclass(frozen=True)
class EstimationPool:
    """Reference points x' over which score changes are accumulated.

    Indices address rows of the ensemble's probability tensor and must be
    distinct; the harness draws them from the current unlabeled pool.
    """

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("estimation pool must be nonempty")
        if len(set(idx)) != len(idx):
            raise ValueError("estimation pool indices must be distinct")
        if min(idx) < 0:
            raise ValueError("estimation pool indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class AcquisitionVector:
    """Per-pool-point accumulated expected score change for one candidate."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size == 0:
            raise ValueError("acquisition vector must be nonempty")
        if not np.all(np.isfinite(vals)):
            raise ValueError("acquisition vector entries must be finite")
        if vals.min() < _NEG_TOL:
            raise ValueError(
                f"acquisition vector entry {vals.min()} below {_NEG_TOL}; "
                "a proper scoring rule cannot produce this"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class BatchSelection:
    """Chosen candidate indices plus the cluster each one represents
    (-1 for strategies that do not cluster)."""

    indices: tuple[int, ...]
    cluster_ids: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        cid = tuple(int(c) for c in self.cluster_ids)
        if len(idx) == 0:
            raise ValueError("batch must be nonempty")
        if len(set(idx)) != len(idx):
            raise ValueError("batch indices must be distinct")
        if len(cid) != len(idx):
            raise ValueError("one cluster id per selected index required")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "cluster_ids", cid)


# --------------------------------------------------------------------------
# Score-change vectors.


def _score_pair(params: ScoreParams, p: np.ndarray):
    s1 = beta_score(params, p, 1, floor=_SCORE_FLOOR)
    s0 = beta_score(params, p, 0, floor=_SCORE_FLOOR)
    return s1, s0


def _delta_q_block(
    probs: np.ndarray,
    weights: np.ndarray,
    cand_rows: np.ndarray,
    pool_rows: np.ndarray,
    params: ScoreParams,
    old_scores,
) -> np.ndarray:
    """Vectorized score-change accumulation for a block of candidates.

    probs is the (members, rows, labels) tensor; returns a (block, pool)
    matrix.  Contractions never mix candidates, so results are bit-equal
    to per-candidate evaluation regardless of block size.
    """
    pc = probs[:, cand_rows, :]                        # (E, C, K)
    q1 = np.einsum("e,eck->ck", weights, pc)           # P(y_k=1 | L, x)
    q0 = 1.0 - q1
    if np.any(q1 <= 0.0) or np.any(q0 <= 0.0):
        c, k = np.argwhere((q1 <= 0.0) | (q0 <= 0.0))[0]
        raise DegenerateEvidenceError(
            f"candidate row {int(cand_rows[c])}, label {int(k)}: hypothesized "
            "outcome has zero evidence under every ensemble member"
        )
    w1 = weights[:, None, None] * pc / q1              # posterior given y_k=1
    w0 = weights[:, None, None] * (1.0 - pc) / q0      # posterior given y_k=0

    pp = probs[:, pool_rows, :]                        # (E, m, K)
    s1_old, s0_old = old_scores                        # (m, K) each
    p_new1 = np.einsum("eck,emk->cmk", w1, pp)
    p_new0 = np.einsum("eck,emk->cmk", w0, pp)

    def gain(p_new):
        s1, s0 = _score_pair(params, p_new)
        return p_new * (s1 - s1_old) + (1.0 - p_new) * (s0 - s0_old)

    return (np.einsum("ck,cmk->cm", q1, gain(p_new1))
            + np.einsum("ck,cmk->cm", q0, gain(p_new0)))


def _pool_old_scores(probs, weights, pool_rows, params):
    p_old = np.einsum("e,emk->mk", weights, probs[:, pool_rows, :])
    return _score_pair(params, p_old)


def delta_q_vector(
    candidate: int,
    pool: EstimationPool,
    probs: EnsembleProbs,
    weights: EnsembleWeights,
    params: ScoreParams,
) -> AcquisitionVector:
    """Acquisition vector of one candidate over the estimation pool."""
    pool_rows = np.asarray(pool.indices, dtype=np.int64)
    _check_rows(probs, np.asarray([candidate]), pool_rows)
    old = _pool_old_scores(probs.probs, weights.weights, pool_rows, params)
    block = _delta_q_block(
        probs.probs, weights.weights,
        np.asarray([int(candidate)], dtype=np.int64), pool_rows, params, old,
    )
    return AcquisitionVector(block[0])


def score_pool(
    candidates,
    pool: EstimationPool,
    probs: EnsembleProbs,
    weights: EnsembleWeights,
    params: ScoreParams,
) -> dict[int, AcquisitionVector]:
    """Acquisition vector for every candidate, keyed and ordered by
    candidate index."""
    cand = np.asarray(sorted(int(c) for c in candidates), dtype=np.int64)
    if cand.size == 0:
        raise ValueError("candidate set must be nonempty")
    if np.unique(cand).size != cand.size:
        raise ValueError("candidate indices must be distinct")
    pool_rows = np.asarray(pool.indices, dtype=np.int64)
    _check_rows(probs, cand, pool_rows)
    old = _pool_old_scores(probs.probs, weights.weights, pool_rows, params)
    out: dict[int, AcquisitionVector] = {}
    for start in range(0, cand.size, _CHUNK):
        rows = cand[start:start + _CHUNK]
        block = _delta_q_block(probs.probs, weights.weights, rows, pool_rows,
                               params, old)
        for i, c in enumerate(rows):
            out[int(c)] = AcquisitionVector(block[i])
    return out


def _check_rows(probs: EnsembleProbs, cand_rows, pool_rows):
    hi = probs.n_instances
    for name, rows in (("candidate", cand_rows), ("pool", pool_rows)):
        if rows.size and (rows.min() < 0 or rows.max() >= hi):
            raise ValueError(
                f"{name} row indices must lie in [0, {hi}), "
                f"got range [{rows.min()}, {rows.max()}]"
            )


# --------------------------------------------------------------------------
# Batch selection.


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            pick = rng.choice(n, p=d2 / total)
        else:
            pick = rng.integers(n)  # all remaining points coincide
        centers[j] = points[pick]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray):
    for _ in range(_KMEANS_MAX_ITER):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        moved = 0.0
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            members = points[assign == j]
            if members.shape[0]:  # empty clusters keep their centroid
                new_centers[j] = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new_centers[j] - centers[j])))
        centers = new_centers
        if moved < _KMEANS_MOVE_TOL:
            break
    return centers


def select_batch(vectors: dict[int, AcquisitionVector], batch_size: int,
                 seed: int) -> BatchSelection:
    """Cluster the acquisition vectors into batch_size groups and pick one
    representative per centroid.

    k-Means runs with k-Means++ seeding from the given seed, at most 300
    Lloyd iterations, stopping when no centroid moves more than 1e-6.
    Centroids are visited in order; each takes its nearest not-yet-taken
    candidate (distance ties broken by lower candidate index).
    """
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    if batch_size > len(vectors):
        raise ValueError(
            f"batch size {batch_size} exceeds the {len(vectors)} candidates"
        )
    keys = np.asarray(sorted(vectors), dtype=np.int64)
    points = np.stack([vectors[int(c)].values for c in keys])
    rng = np.random.default_rng(seed)
    centers = _lloyd(points, _kmeans_pp_init(points, batch_size, rng))

    taken = np.zeros(keys.size, dtype=bool)
    chosen: list[int] = []
    clusters: list[int] = []
    for j in range(batch_size):
        d2 = ((points - centers[j]) ** 2).sum(axis=1)
        d2[taken] = np.inf
        pick = int(d2.argmin())  # argmin takes the first, so ties go to
        taken[pick] = True       # the lower candidate index
        chosen.append(int(keys[pick]))
        clusters.append(j)
    return BatchSelection(tuple(chosen), tuple(clusters))


def random_acquire(candidates, batch_size: int, seed: int) -> BatchSelection:
    """Uniform sample without replacement from the candidate set."""
    cand = sorted(int(c) for c in candidates)
    if batch_size < 1 or batch_size > len(cand):
        raise ValueError(
            f"batch size must be in [1, {len(cand)}], got {batch_size}"
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(cand), size=batch_size, replace=False)
    return BatchSelection(tuple(cand[i] for i in picks),
                          (-1,) * batch_size)


def uncertainty_acquire(candidates, probs: EnsembleProbs,
                        weights: EnsembleWeights, batch_size: int) -> BatchSelection:
    """Top candidates by mean per-label binary entropy of the ensemble
    predictive; ties broken by lower candidate index."""
    cand = np.asarray(sorted(int(c) for c in candidates), dtype=np.int64)
    if batch_size < 1 or batch_size > cand.size:
        raise ValueError(
            f"batch size must be in [1, {cand.size}], got {batch_size}"
        )
    _check_rows(probs, cand, np.asarray([], dtype=np.int64))
    p = np.einsum("e,enk->nk", weights.weights, probs.probs[:, cand, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -(np.where(p > 0, p * np.log(p), 0.0)
                + np.where(p < 1, (1.0 - p) * np.log1p(-p), 0.0))
    scores = ent.mean(axis=1)
    order = np.lexsort((cand, -scores))
    picks = order[:batch_size]
    return BatchSelection(tuple(int(cand[i]) for i in picks),
                          (-1,) * batch_size)
