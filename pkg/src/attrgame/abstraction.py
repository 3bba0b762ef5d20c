"""Feature-partition abstraction experiment.

A dataset's n features are split into k blocks, one representative feature
is drawn per block, and a classifier is trained on the k-feature projection.
Sweeping k and comparing against the all-features control measures whether
the choice of representatives matters.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np

from .game_core import Partition

log = logging.getLogger(__name__)

Scheme = Literal["contiguous", "random", "grid"]


class DegenerateSplitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ValueError("samples must be a 2-d array")
        if y.shape != (x.shape[0],):
            raise ValueError("labels must have one entry per sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain missing or non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def class_count(self) -> int:
        return np.unique(self.labels).size

    def __len__(self):
        return self.samples.shape[0]


def load_csv(path, label_column: int = 0, header: bool | None = None) -> Dataset:
    """Read a CSV with one label column and numeric feature columns.

    ``header=None`` sniffs: a first row whose feature cells are not numeric is
    treated as a header.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    if header is None:
        try:
            [float(c) for i, c in enumerate(rows[0]) if i != label_column]
            header = False
        except ValueError:
            header = True
    if header:
        rows = rows[1:]
    labels = []
    feats = []
    width = len(rows[0]) if rows else 0
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
        labels.append(row[label_column])
        try:
            feats.append([float(c) for i, c in enumerate(row) if i != label_column])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return Dataset(np.array(feats), np.array(labels))


def make_correlated_dataset(
    n_samples: int = 1000,
    n_groups: int = 8,
    group_size: int = 5,
    n_classes: int = 3,
    noise: float = 1.0,
    seed: int = 0,
) -> tuple[Dataset, Partition]:
    """Synthetic data where every group of columns holds identical copies of one latent feature.

    Returns the dataset and the group-aligned partition.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.5, size=(n_classes, n_groups))
    labels = rng.integers(0, n_classes, size=n_samples)
    latent = centers[labels] + rng.normal(0.0, noise, size=(n_samples, n_groups))
    samples = np.repeat(latent, group_size, axis=1)
    blocks = [range(g * group_size, (g + 1) * group_size) for g in range(n_groups)]
    return Dataset(samples, labels), Partition(blocks)


def _balanced_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + 1] * extra + [base] * (k - extra)


def make_partition(
    n: int,
    k: int,
    scheme: Scheme = "random",
    seed: int | np.random.Generator | None = 0,
    grid: tuple[int, int] | None = None,
) -> Partition:
    """Partition feature indices ``0..n-1`` into ``k`` blocks.

    Blocks come back ordered by their smallest member, so ``k == n`` always
    yields the identity partition.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if scheme == "contiguous":
        bounds = np.cumsum([0] + _balanced_sizes(n, k))
        blocks = [range(bounds[i], bounds[i + 1]) for i in range(k)]
    elif scheme == "random":
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        bounds = np.cumsum([0] + _balanced_sizes(n, k))
        blocks = [perm[bounds[i]:bounds[i + 1]] for i in range(k)]
    elif scheme == "grid":
        if grid is None:
            side = math.isqrt(n)
            grid = (side, side)
        rows, cols = grid
        if rows * cols != n:
            raise ValueError(f"grid {rows}x{cols} does not tile {n} features")
        blocks = _grid_blocks(rows, cols, k)
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}")
    blocks = sorted((sorted(int(a) for a in b) for b in blocks), key=lambda b: b[0])
    return Partition(blocks)


def _grid_blocks(rows: int, cols: int, k: int) -> list[list[int]]:
    # Tile into a near-square grid of at least k cells, then merge the surplus
    # cells into their row-major predecessor so exactly k regions remain.
    if k > rows * cols:
        raise ValueError("more regions than pixels")
    gr = max(1, min(rows, math.isqrt(k)))
    while gr * min(cols, math.ceil(k / gr)) < k:
        gr += 1
    gc = min(cols, math.ceil(k / gr))
    row_of = np.minimum(np.arange(rows) * gr // rows, gr - 1)
    col_of = np.minimum(np.arange(cols) * gc // cols, gc - 1)
    cell = (row_of[:, None] * gc + col_of[None, :]).ravel()
    cell = np.minimum(cell, k - 1)
    return [np.flatnonzero(cell == c).tolist() for c in range(k)]


@dataclass(frozen=True)
class AbstractionPlan:
    partition: Partition
    representatives: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.representatives) != self.partition.k:
            raise ValueError("need one representative per block")
        for r, block in zip(self.representatives, self.partition.blocks):
            if r not in block:
                raise ValueError(f"representative {r} is not in its block")

    @classmethod
    def draw(cls, partition: Partition, seed) -> "AbstractionPlan":
        rng = np.random.default_rng(seed)
        reps = tuple(int(b[rng.integers(len(b))]) for b in partition.blocks)
        return cls(partition, reps, seed if isinstance(seed, int) else None)


def abstract_dataset(data: Dataset, plan: AbstractionPlan) -> Dataset:
    """Project every sample onto the plan's representatives, in block order."""
    if max(plan.partition.attributes) >= data.n:
        raise ValueError(
            f"partition references feature {max(plan.partition.attributes)}, dataset has {data.n}"
        )
    return Dataset(data.samples[:, list(plan.representatives)], data.labels)


def abstract_per_sample(data: Dataset, partition: Partition, seed) -> tuple[Dataset, np.ndarray]:
    """Draw a fresh representative per sample and block.

    Returns the abstracted dataset and the (samples, k) array of chosen feature
    indices.
    """
    if max(partition.attributes) >= data.n:
        raise ValueError("partition references features outside the dataset")
    rng = np.random.default_rng(seed)
    m = len(data)
    chosen = np.empty((m, partition.k), dtype=np.int64)
    for i, block in enumerate(partition.blocks):
        chosen[:, i] = np.asarray(block)[rng.integers(len(block), size=m)]
    values = np.take_along_axis(data.samples, chosen, axis=1)
    return Dataset(values, data.labels), chosen


class RidgeOVR:
    """One-vs-rest least-squares linear classifier with L2 penalty.

    ``alpha="auto"`` sets the penalty to the feature count, which keeps the
    fit away from interpolation when features approach the sample count.
    """

    def __init__(self, alpha: float | Literal["auto"] = 1.0):
        self.alpha = alpha

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RidgeOVR":
        self.classes_, idx = np.unique(y, return_inverse=True)
        self.mean_ = x.mean(axis=0)
        scale = x.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        z = (x - self.mean_) / self.scale_
        targets = -np.ones((x.shape[0], self.classes_.size))
        targets[np.arange(x.shape[0]), idx] = 1.0
        self.intercept_ = targets.mean(axis=0)
        alpha = float(z.shape[1]) if self.alpha == "auto" else self.alpha
        gram = z.T @ z + alpha * np.eye(z.shape[1])
        self.coef_ = np.linalg.solve(gram, z.T @ (targets - self.intercept_))
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        return ((x - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(x), axis=1)]


class NearestCentroid:
    """Assign the class whose training mean is closest; a threshold rule in 1-d."""

    def fit(self, x: np.ndarray, y: np.ndarray) -> "NearestCentroid":
        self.classes_, idx = np.unique(y, return_inverse=True)
        self.centroids_ = np.stack([x[idx == c].mean(axis=0) for c in range(self.classes_.size)])
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        d = ((x[:, None, :] - self.centroids_[None]) ** 2).sum(axis=2)
        return self.classes_[np.argmin(d, axis=1)]


CLASSIFIERS = {
    "ridge": RidgeOVR,
    "ridge-auto": lambda: RidgeOVR("auto"),
    "centroid": NearestCentroid,
}


def split_indices(n: int, train_fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    cut = int(round(train_fraction * n))
    return perm[:cut], perm[cut:]


def train_eval(
    data: Dataset,
    split: tuple[float, int] = (0.8, 0),
    classifier: str = "ridge",
    return_train: bool = False,
    indices: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Held-out accuracy of the built-in classifier on a seeded split."""
    train_fraction, seed = split
    tr, te = indices if indices is not None else split_indices(len(data), train_fraction, seed)
    if te.size == 0:
        raise DegenerateSplitError("test split is empty")
    if np.unique(data.labels[tr]).size < 2:
        raise DegenerateSplitError("training split holds fewer than 2 classes")
    model = CLASSIFIERS[classifier]().fit(data.samples[tr], data.labels[tr])
    test_acc = float(np.mean(model.predict(data.samples[te]) == data.labels[te]))
    if return_train:
        train_acc = float(np.mean(model.predict(data.samples[tr]) == data.labels[tr]))
        return test_acc, train_acc
    return test_acc


@dataclass
class SweepRecord:
    k: int
    mean_acc: float
    std_acc: float
    repeats: int
    train_acc: float
    accuracies: list[float] = field(default_factory=list)
    comparable: bool = False
    error: str | None = None


@dataclass
class SweepResult:
    records: list[SweepRecord]
    control: SweepRecord

    @property
    def band(self) -> tuple[float, float]:
        c = self.control
        return c.mean_acc - c.std_acc, c.mean_acc + c.std_acc

    def record(self, k: int) -> SweepRecord:
        for r in self.records:
            if r.k == k:
                return r
        raise KeyError(k)

    def to_json(self) -> dict:
        return {
            "control": asdict(self.control),
            "band": list(self.band),
            "records": [asdict(r) for r in self.records],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "mean_acc", "std_acc", "comparable"])
            for r in self.records:
                w.writerow([r.k, repr(r.mean_acc), repr(r.std_acc), int(r.comparable)])


def _stream(seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *path])


def sweep_k(
    data: Dataset,
    k_values: Sequence[int],
    repeats: int = 10,
    scheme: Scheme = "random",
    seed: int = 0,
    train_fraction: float = 0.8,
    classifier: str = "ridge",
    per_sample: bool = False,
    partitions: dict[int, Partition] | None = None,
    control_repeats: int | None = None,
    grid: tuple[int, int] | None = None,
    workers: int = 1,
) -> SweepResult:
    """Accuracy of the abstracted data for each k, against an all-features control.

    Repeat r of every k uses the same train/test split as control repeat r, so
    records are paired with the control. RNG streams derive from
    ``(seed, purpose, k, repeat)`` and results do not depend on ``workers``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    control_repeats = max(10, repeats) if control_repeats is None else control_repeats
    splits = [
        split_indices(len(data), train_fraction, _stream(seed, 0, r))
        for r in range(max(repeats, control_repeats))
    ]

    def run_control(r):
        return train_eval(data, classifier=classifier, return_train=True, indices=splits[r])

    def run_one(k, r):
        if partitions is not None and k in partitions:
            part = partitions[k]
        else:
            part = make_partition(data.n, k, scheme, _stream(seed, 1, k, r), grid)
        if per_sample:
            reduced, _ = abstract_per_sample(data, part, _stream(seed, 2, k, r))
        else:
            reduced = abstract_dataset(data, AbstractionPlan.draw(part, _stream(seed, 2, k, r)))
        return train_eval(reduced, classifier=classifier, return_train=True, indices=splits[r])

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        control_runs = list(pool.map(run_control, range(control_repeats)))
        jobs = {
            k: [pool.submit(run_one, k, r) for r in range(repeats)] for k in k_values
        }
        control = _aggregate(data.n, control_runs)
        lo, hi = control.mean_acc - control.std_acc, control.mean_acc + control.std_acc
        records = []
        for k, futures in jobs.items():
            try:
                if not 1 <= k <= data.n:
                    raise ValueError(f"k={k} outside 1..{data.n}")
                rec = _aggregate(k, [f.result() for f in futures])
                rec.comparable = bool(lo <= rec.mean_acc <= hi)
            except (ValueError, np.linalg.LinAlgError) as exc:
                log.warning("sweep k=%s failed: %s", k, exc)
                rec = SweepRecord(k, math.nan, math.nan, 0, math.nan, error=str(exc))
            records.append(rec)
    control.comparable = True
    return SweepResult(records, control)


def _aggregate(k: int, runs: list[tuple[float, float]]) -> SweepRecord:
    test = np.array([t for t, _ in runs])
    train = np.array([t for _, t in runs])
    std = float(test.std(ddof=1)) if test.size > 1 else 0.0
    return SweepRecord(k, float(test.mean()), std, test.size, float(train.mean()), test.tolist())
