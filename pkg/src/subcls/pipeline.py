# Train/evaluate plumbing shared by the CLI and the experiment runners.

from __future__ import annotations

import numpy as np

from .data import LabeledDataset
from .geometry import Subspace, orthonormal_basis
from .gmm import GaussianClassModel, MapClassifier
from .nsc import NscClassifier
from .transforms import LinearTransform


def fit_class_subspaces(dataset: LabeledDataset, rank: int) -> list[Subspace]:
    """Rank-d subspace per class from the class sample blocks."""
    out = []
    for label in range(1, dataset.num_classes + 1):
        block = dataset.class_matrix(label)
        if block.shape[1] < rank:
            raise ValueError(
                f"class {label} has {block.shape[1]} samples, fewer than rank {rank}"
            )
        out.append(orthonormal_basis(block, rank))
    return out


def fit_class_models(dataset: LabeledDataset, rank: int) -> list[GaussianClassModel]:
    """Gaussian model per class: top-d spectrum plus an isotropic residual.

    The noise variance is the mean residual eigenvalue (floored away from
    zero); signal eigenvalues are the leading sample-covariance
    eigenvalues minus that noise level.
    """
    models = []
    for label in range(1, dataset.num_classes + 1):
        block = dataset.class_matrix(label)
        count = block.shape[1]
        if count < rank:
            raise ValueError(
                f"class {label} has {count} samples, fewer than rank {rank}"
            )
        cov = block @ block.T / count
        eigs, vecs = np.linalg.eigh(cov)
        eigs, vecs = eigs[::-1], vecs[:, ::-1]
        n = block.shape[0]
        resid = eigs[rank:]
        noise = float(np.mean(resid)) if len(resid) else 0.0
        noise = max(noise, 1e-10 * max(eigs[0], 1.0))
        lam = np.maximum(eigs[:rank] - noise, 1e-12)
        lam = np.sort(lam)[::-1]
        basis = vecs[:, :rank]
        idx = np.argmax(np.abs(basis), axis=0)
        signs = np.sign(basis[idx, np.arange(rank)])
        signs[signs == 0] = 1.0
        models.append(GaussianClassModel(Subspace(basis * signs), lam, noise))
    return models


def classify_dataset(
    train: LabeledDataset,
    test: LabeledDataset,
    classifier: str,
    rank: int,
    transform: LinearTransform | None = None,
) -> dict:
    """Fit per-class structure on train, evaluate accuracy on test.

    Returns a report with accuracy and per-class confusion counts keyed
    by true label then predicted label.
    """
    if transform is not None:
        train = transform.apply_dataset(train)
        test = transform.apply_dataset(test)
    if train.num_classes != test.num_classes:
        raise ValueError("train and test disagree on the number of classes")
    if classifier == "nsc":
        machine = NscClassifier(fit_class_subspaces(train, rank))
    elif classifier == "map":
        machine = MapClassifier(fit_class_models(train, rank))
    else:
        raise ValueError(f"unknown classifier {classifier!r}")
    pred = machine.classify_batch(test.samples) + 1
    correct = int(np.count_nonzero(pred == test.labels))
    confusion = {
        str(true): {
            str(p): int(np.count_nonzero(pred[test.labels == true] == p))
            for p in range(1, test.num_classes + 1)
        }
        for true in range(1, test.num_classes + 1)
    }
    return {
        "classifier": classifier,
        "rank": rank,
        "transformed": transform is not None,
        "num_test": test.num_samples,
        "accuracy": correct / test.num_samples,
        "confusion": confusion,
    }


def dense_map_error(covariances, test: LabeledDataset) -> float:
    """MAP error under known dense class covariances (zero means)."""
    import scipy.linalg as sla

    factors = []
    half_logdets = []
    for cov in covariances:
        c, low = sla.cho_factor(cov, lower=True)
        factors.append(c)
        half_logdets.append(float(np.sum(np.log(np.diag(c)))))
    scores = np.empty((len(covariances), test.num_samples))
    for k, (c, hld) in enumerate(zip(factors, half_logdets)):
        z = sla.solve_triangular(c, test.samples, lower=True)
        scores[k] = -hld - 0.5 * np.einsum("ij,ij->j", z, z)
    pred = np.argmax(scores, axis=0) + 1
    return float(np.count_nonzero(pred != test.labels)) / test.num_samples
