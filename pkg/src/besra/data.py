"""Multi-label datasets: imbalance statistics, synthetic generation, file I/O.

Synthetic sets are built to a target mean imbalance ratio (MeanIR): label
frequencies follow a geometric profile whose ratio is solved numerically
against the realized integer counts, and features are Gaussian prototype
mixtures so that every label stays learnable by a linear model.

The on-disk format is line-delimited and diff-friendly:

    #multilabel-v1 n=<instances> d=<dim> k=<labels> split=<tag>
    <label,label,...> <index>:<value> <index>:<value> ...

Label indices are ascending and comma-separated; feature pairs are sparse
(absent indices are zero) with values written in shortest round-trip form,
so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultiLabelDataset",
    "ImbalanceReport",
    "DatasetFormatError",
    "InfeasibleImbalanceError",
    "mean_ir",
    "generate_synthetic",
    "save_dataset",
    "load_dataset",
]


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message carries the offending line number."""


class InfeasibleImbalanceError(ValueError):
    """Requested MeanIR cannot be realized; carries the closest achievable value."""

    def __init__(self, target: float, closest: float):
        super().__init__(
            f"MeanIR target {target} is not achievable with these dimensions; "
            f"closest achievable is {closest:.3f}"
        )
        self.target = target
        self.closest = closest


@dataclass(frozen=True)
class MultiLabelDataset:
    """Dense feature matrix (n, d) with a binary label matrix (n, k)."""

    features: np.ndarray
    labels: np.ndarray
    split: str = "train"

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)
        labs = np.array(self.labels, dtype=np.int8)
        if feats.ndim != 2 or labs.ndim != 2:
            raise ValueError("features and labels must be 2-d matrices")
        if feats.shape[0] != labs.shape[0]:
            raise ValueError(
                f"row mismatch: {feats.shape[0]} feature rows vs {labs.shape[0]} label rows"
            )
        if feats.shape[0] < 1 or feats.shape[1] < 1 or labs.shape[1] < 1:
            raise ValueError("dataset dimensions must all be positive")
        if not np.all((labs == 0) | (labs == 1)):
            raise ValueError("label matrix entries must be 0 or 1")
        rowless = np.where(labs.sum(axis=1) == 0)[0]
        if rowless.size:
            raise ValueError(f"instance {rowless[0]} has no positive label")
        feats.flags.writeable = False
        labs.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def subset(self, indices, split: str | None = None) -> "MultiLabelDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return MultiLabelDataset(self.features[idx], self.labels[idx],
                                 self.split if split is None else split)


@dataclass(frozen=True)
class ImbalanceReport:
    """Per-label positive counts, per-label imbalance ratios, and summaries.

    IRLbl(k) = (count of the most frequent label) / count(k), so every ratio
    is >= 1 and MeanIR is their mean.  Cardinality (mean labels per instance)
    and density (cardinality / #labels) are reported alongside but are never
    generation targets.
    """

    counts: tuple[int, ...]
    irlbl: tuple[float, ...]
    mean_ir: float
    cardinality: float
    density: float


def mean_ir(labels) -> ImbalanceReport:
    """Imbalance statistics of a binary label matrix (instances x labels)."""
    labs = np.asarray(labels)
    if labs.ndim != 2:
        raise ValueError("label matrix must be 2-d")
    counts = labs.sum(axis=0).astype(np.int64)
    zero = np.where(counts == 0)[0]
    if zero.size:
        raise ValueError(
            f"label {zero[0]} has no positive instances; its imbalance ratio is undefined"
        )
    ir = counts.max() / counts
    card = float(labs.sum() / labs.shape[0])
    return ImbalanceReport(
        counts=tuple(int(c) for c in counts),
        irlbl=tuple(float(v) for v in ir),
        mean_ir=float(ir.mean()),
        cardinality=card,
        density=card / labs.shape[1],
    )


# --------------------------------------------------------------------------
# Synthetic generation.

_MEANIR_TOL = 0.05  # relative tolerance on the realized MeanIR


def _counts_mean_ir(counts: np.ndarray) -> float:
    return float((counts.max() / counts).mean())


def _geometric_counts(n: int, k: int, ratio: float) -> np.ndarray:
    raw = n * ratio ** np.arange(k)
    return np.maximum(1, np.rint(raw)).astype(np.int64)


def _solve_label_counts(n: int, k: int, target: float) -> np.ndarray:
    """Integer per-label positive counts whose realized MeanIR is within
    tolerance of the target.

    The most frequent label is pinned to all n instances (which also
    guarantees every instance at least one positive); the remaining counts
    follow a geometric profile.  The ratio is chosen by scanning a fine
    grid against the realized integer counts, then single-count adjustments
    close any remaining gap left by integer rounding.
    """
    if target < 1.0:
        raise ValueError(f"MeanIR target must be >= 1, got {target}")
    if k == 1 or target == 1.0:
        counts = np.full(k, n, dtype=np.int64)
        if abs(_counts_mean_ir(counts) - target) > _MEANIR_TOL * target:
            raise InfeasibleImbalanceError(target, _counts_mean_ir(counts))
        return counts
    max_ir = (1.0 + (k - 1) * n) / k  # every rare label at a single positive
    if target > max_ir:
        raise InfeasibleImbalanceError(target, max_ir)

    grid = np.linspace(1.0, 0.01, 6000)
    best = None
    best_gap = np.inf
    for r in grid:
        counts = _geometric_counts(n, k, r)
        gap = abs(_counts_mean_ir(counts) - target)
        if gap < best_gap:
            best, best_gap = counts, gap

    # greedy +-1 adjustments of the non-anchor counts
    counts = best.copy()
    for _ in range(50):
        realized = _counts_mean_ir(counts)
        if abs(realized - target) <= 0.5 * _MEANIR_TOL * target:
            break
        moves = []
        for j in range(1, k):
            for delta in (-1, 1):
                c = counts[j] + delta
                if 1 <= c <= n:
                    trial = counts.copy()
                    trial[j] = c
                    moves.append((abs(_counts_mean_ir(trial) - target), j, c))
        moves.sort()
        if not moves or moves[0][0] >= abs(realized - target):
            break
        _, j, c = moves[0]
        counts[j] = c

    realized = _counts_mean_ir(counts)
    if abs(realized - target) > _MEANIR_TOL * target:
        raise InfeasibleImbalanceError(target, realized)
    return counts


def _assign_labels(n: int, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    labels = np.zeros((n, counts.shape[0]), dtype=np.int8)
    labels[:, 0] = 1  # anchor label covers everything
    for j in range(1, counts.shape[0]):
        pos = rng.choice(n, size=int(counts[j]), replace=False)
        labels[pos, j] = 1
    return labels


def generate_synthetic(
    n_train: int,
    n_test: int,
    target_mean_ir: float,
    *,
    n_labels: int = 10,
    dim: int = 50,
    test_mean_ir: float = 50.0,
    noise: float = 0.15,
    feature_scale: float = 1.0,
    seed: int = 0,
) -> tuple[MultiLabelDataset, MultiLabelDataset]:
    """Generate a (train, test) pair at the requested imbalance levels.

    Both splits share one set of per-label Gaussian prototypes; an
    instance's features are the sum of the prototypes of its positive
    labels plus isotropic noise, which keeps every label linearly
    separable in expectation.  Fully deterministic for a given seed.
    """
    if n_train < 1 or n_test < 1 or n_labels < 1 or dim < 1:
        raise ValueError("dataset dimensions must all be positive")
    counts_train = _solve_label_counts(n_train, n_labels, float(target_mean_ir))
    counts_test = _solve_label_counts(n_test, n_labels, float(test_mean_ir))

    root = np.random.SeedSequence(seed)
    proto_rng, train_rng, test_rng = (np.random.default_rng(s) for s in root.spawn(3))
    protos = proto_rng.normal(0.0, feature_scale / np.sqrt(dim), size=(n_labels, dim))

    def build(n, counts, rng, split):
        labels = _assign_labels(n, counts, rng)
        feats = labels @ protos + rng.normal(0.0, noise, size=(n, dim))
        return MultiLabelDataset(feats, labels, split)

    return (build(n_train, counts_train, train_rng, "train"),
            build(n_test, counts_test, test_rng, "test"))


# --------------------------------------------------------------------------
# File format.

_HEADER_RE = re.compile(
    r"^#multilabel-v1 n=(\d+) d=(\d+) k=(\d+) split=(\S+)$"
)


def save_dataset(dataset: MultiLabelDataset, path) -> None:
    """Write the line-delimited sparse format described in the module docs."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"#multilabel-v1 n={dataset.n_instances} d={dataset.n_features} "
            f"k={dataset.n_labels} split={dataset.split}\n"
        )
        for i in range(dataset.n_instances):
            labs = ",".join(str(j) for j in np.flatnonzero(dataset.labels[i]))
            row = dataset.features[i]
            pairs = " ".join(
                f"{j}:{float(row[j])!r}" for j in np.flatnonzero(row != 0.0)
            )
            fh.write(f"{labs} {pairs}\n".rstrip() + "\n")


def load_dataset(path) -> MultiLabelDataset:
    """Read a dataset file; raises DatasetFormatError with the line number
    of the first problem."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise DatasetFormatError("line 1: empty file, expected header")
        m = _HEADER_RE.match(header.strip())
        if m is None:
            raise DatasetFormatError(f"line 1: malformed header {header.strip()!r}")
        n, d, k = int(m.group(1)), int(m.group(2)), int(m.group(3))
        split = m.group(4)
        feats = np.zeros((n, d))
        labs = np.zeros((n, k), dtype=np.int8)
        row = 0
        lineno = 1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            if row >= n:
                raise DatasetFormatError(f"line {lineno}: more records than header n={n}")
            parts = line.split(" ")
            try:
                for tok in parts[0].split(","):
                    labs[row, int(tok)] = 1
            except (ValueError, IndexError):
                raise DatasetFormatError(
                    f"line {lineno}: bad label list {parts[0]!r}"
                ) from None
            for pair in parts[1:]:
                try:
                    idx, _, val = pair.partition(":")
                    feats[row, int(idx)] = float(val)
                except (ValueError, IndexError):
                    raise DatasetFormatError(
                        f"line {lineno}: bad feature pair {pair!r}"
                    ) from None
            row += 1
        if row != n:
            raise DatasetFormatError(
                f"line {lineno if row else 1}: expected {n} records, found {row}"
            )
    try:
        return MultiLabelDataset(feats, labs, split)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from None
