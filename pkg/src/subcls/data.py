# Synthetic dataset generators, the two worked subspace pairs, and CSV
# ingestion for externally supplied labeled data.

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Subspace
from .gmm import GaussianClassModel, _mix


@dataclass(frozen=True)
class LabeledDataset:
    """Column-sample matrix with 1-based integer class labels.

    Every class index in 1..K appears at least once; all entries are
    finite.
    """

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        labels = np.array(self.labels, dtype=int)
        if samples.ndim != 2:
            raise ValueError("samples must be a 2-D matrix (columns are samples)")
        if labels.ndim != 1 or len(labels) != samples.shape[1]:
            raise ValueError("need one label per sample column")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite entries")
        if len(labels) == 0:
            raise ValueError("dataset is empty")
        k = int(labels.max())
        if labels.min() < 1:
            raise ValueError("labels must be >= 1")
        present = np.unique(labels)
        if len(present) != k:
            missing = sorted(set(range(1, k + 1)) - set(present.tolist()))
            raise ValueError(f"missing class indices: {missing}")
        samples.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max())

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    def class_matrix(self, label: int) -> np.ndarray:
        """Columns of the given class, in stored order."""
        if not 1 <= label <= self.num_classes:
            raise ValueError(f"label must be in [1, {self.num_classes}]")
        return self.samples[:, self.labels == label]

    def grouped(self) -> "LabeledDataset":
        """Same data with columns stably reordered class by class."""
        order = np.argsort(self.labels, kind="stable")
        return LabeledDataset(self.samples[:, order], self.labels[order])


def case_subspaces(case_id: int) -> tuple[Subspace, Subspace]:
    """The two worked 4-dimensional subspace pairs.

    Case 1 shares one direction (angles 0 and 90 degrees); case 2 has two
    45-degree angles. Both have squared chordal distance 1.
    """
    u1 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    if case_id == 1:
        u2 = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    elif case_id == 2:
        u2 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [-1.0, 0.0]]) / np.sqrt(2.0)
    else:
        raise ValueError(f"case_id must be 1 or 2, got {case_id}")
    return Subspace(u1), Subspace(u2)


def case_models(case_id: int, noise_var: float) -> tuple[GaussianClassModel, GaussianClassModel]:
    """Unit-eigenvalue Gaussian models over the worked subspace pair."""
    s1, s2 = case_subspaces(case_id)
    ones = np.ones(s1.rank)
    return (
        GaussianClassModel(s1, ones, noise_var),
        GaussianClassModel(s2, ones, noise_var),
    )


def _random_orthonormal(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, d)))
    return q * np.sign(np.diag(r))


def sample_gmm_dataset(models, counts, seed) -> LabeledDataset:
    """Draw ``counts[k]`` samples from each class model (deterministic)."""
    counts = _per_class_counts(counts, len(models))
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for k, (model, count) in enumerate(zip(models, counts), start=1):
        g = rng.standard_normal((model.rank, count))
        h = rng.standard_normal((model.ambient_dim, count))
        blocks.append(_mix(model, g, h))
        labels.append(np.full(count, k))
    return LabeledDataset(np.hstack(blocks), np.concatenate(labels))


def gen_gmm_classes(
    k: int,
    n: int,
    d: int,
    sigma2: float,
    seed,
    samples_per_class: int = 100,
):
    """Random unit-eigenvalue class models plus one sampled dataset.

    Bases are orthonormalized i.i.d. Gaussian n x d draws; eigenvalues
    are all 1. Per-class counts are configurable.
    """
    if d > n:
        raise ValueError("need d <= n")
    rng = np.random.default_rng(seed)
    models = [
        GaussianClassModel(Subspace(_random_orthonormal(rng, n, d)), np.ones(d), sigma2)
        for _ in range(k)
    ]
    dataset = sample_gmm_dataset(models, samples_per_class, rng.integers(2**32))
    return models, dataset


def sample_uniform_dataset(bases, sigma: float, counts, seed) -> LabeledDataset:
    """Samples U_k a + noise with coordinates uniform on [-2, 2]."""
    counts = _per_class_counts(counts, len(bases))
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for k, (base, count) in enumerate(zip(bases, counts), start=1):
        coeff = rng.uniform(-2.0, 2.0, size=(base.rank, count))
        noise = rng.standard_normal((base.ambient_dim, count))
        blocks.append(base.basis @ coeff + sigma * noise)
        labels.append(np.full(count, k))
    return LabeledDataset(np.hstack(blocks), np.concatenate(labels))


def gen_uniform_subspace_data(
    k: int,
    n: int,
    d: int,
    sigma: float,
    seed,
    counts: int = 100,
):
    """Random subspaces with uniform (non-Gaussian) coordinates.

    Defaults mirror the 3-class, n = 100, d = 5 synthetic benchmark.
    """
    if d > n:
        raise ValueError("need d <= n")
    rng = np.random.default_rng(seed)
    bases = [Subspace(_random_orthonormal(rng, n, d)) for _ in range(k)]
    dataset = sample_uniform_dataset(bases, sigma, counts, rng.integers(2**32))
    return bases, dataset


def _per_class_counts(counts, k: int) -> list[int]:
    if np.isscalar(counts):
        counts = [int(counts)] * k
    counts = [int(c) for c in counts]
    if len(counts) != k or any(c < 1 for c in counts):
        raise ValueError("need a positive sample count per class")
    return counts


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Write label-first CSV: one sample per line, no header, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j in range(dataset.num_samples):
            vals = ",".join(format(v, ".17g") for v in dataset.samples[:, j])
            fh.write(f"{dataset.labels[j]},{vals}\n")


def load_dataset(path) -> LabeledDataset:
    """Parse the label-first CSV schema, reporting offending line numbers."""
    path = Path(path)
    rows, labels = [], []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
                if width < 2:
                    raise ValueError(f"{path}:{lineno}: need a label and at least one feature")
            elif len(fields) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} fields, found {len(fields)}"
                )
            try:
                label = int(fields[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer label {fields[0]!r}") from None
            try:
                rows.append([float(v) for v in fields[1:]])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed feature value") from None
            labels.append(label)
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    return LabeledDataset(np.array(rows).T, np.array(labels))


def split(dataset: LabeledDataset, train_fraction: float, seed):
    """Stratified random split keeping at least one sample per side per class."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for label in range(1, dataset.num_classes + 1):
        idx = np.flatnonzero(dataset.labels == label)
        if len(idx) < 2:
            raise ValueError(f"class {label} has {len(idx)} sample(s); cannot split")
        perm = rng.permutation(idx)
        n_train = int(np.clip(round(train_fraction * len(idx)), 1, len(idx) - 1))
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return (
        LabeledDataset(dataset.samples[:, train_idx], dataset.labels[train_idx]),
        LabeledDataset(dataset.samples[:, test_idx], dataset.labels[test_idx]),
    )
