# Low-rank Gaussian class models, sampling, MAP classification and Monte
# Carlo error estimation.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .geometry import Subspace


@dataclass(frozen=True)
class GaussianClassModel:
    """Zero-mean Gaussian class with covariance U diag(eigenvalues) U^T + noise_var I.

    Eigenvalues are strictly positive and nonincreasing; the implied
    covariance must be symmetric positive definite (noise_var > 0, or
    noise_var = 0 with a full-rank subspace).
    """

    subspace: Subspace
    eigenvalues: np.ndarray
    noise_var: float

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or len(lam) != self.subspace.rank:
            raise ValueError("need one eigenvalue per basis column")
        if np.any(lam <= 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) > 1e-12):
            raise ValueError("eigenvalues must be nonincreasing")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")
        if self.noise_var == 0 and self.subspace.rank < self.subspace.ambient_dim:
            raise ValueError("noise_var = 0 needs a full-rank subspace for a PD covariance")
        lam.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "noise_var", float(self.noise_var))

    @property
    def ambient_dim(self) -> int:
        return self.subspace.ambient_dim

    @property
    def rank(self) -> int:
        return self.subspace.rank


@dataclass(frozen=True)
class ErrorEstimate:
    """Monte Carlo estimate with its standard error and provenance."""

    mean: float
    std_err: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.mean <= 1.0 or self.std_err < 0:
            raise ValueError("mean must be in [0, 1] and std_err nonnegative")

    @classmethod
    def from_bernoulli(cls, failures: int, trials: int, seed: int) -> "ErrorEstimate":
        mean = failures / trials
        return cls(mean, float(np.sqrt(mean * (1.0 - mean) / trials)), trials, seed)


def covariance(model: GaussianClassModel) -> np.ndarray:
    """Dense covariance U diag(eigenvalues) U^T + noise_var I."""
    u = model.subspace.basis
    cov = (u * model.eigenvalues) @ u.T + model.noise_var * np.eye(model.ambient_dim)
    return (cov + cov.T) / 2


def sample(model: GaussianClassModel, count: int, seed) -> np.ndarray:
    """Draw ``count`` i.i.d. columns from the model.

    Columns are U Lambda^{1/2} g + sigma h with independent standard
    normal g (length d) and h (length n), so each sample costs O(nd)
    and the covariance is exact. Deterministic for a given seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((model.rank, count))
    h = rng.standard_normal((model.ambient_dim, count))
    return _mix(model, g, h)


def _mix(model: GaussianClassModel, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    u = model.subspace.basis
    return u @ (np.sqrt(model.eigenvalues)[:, None] * g) + np.sqrt(model.noise_var) * h


class MapClassifier:
    """MAP rule for equiprobable zero-mean Gaussian classes.

    Per-model Cholesky factorizations are precomputed; scores are
    log-densities up to the shared additive constant. Ties resolve to the
    lowest index.
    """

    def __init__(self, models):
        models = list(models)
        if len(models) < 2:
            raise ValueError("need at least two models")
        n = models[0].ambient_dim
        if any(m.ambient_dim != n for m in models):
            raise ValueError("models must share an ambient dimension")
        self.models = models
        self._factors = []
        self._half_logdets = []
        for m in models:
            c, low = sla.cho_factor(covariance(m), lower=True)
            self._factors.append((c, low))
            self._half_logdets.append(float(np.sum(np.log(np.diag(c)))))

    def log_scores(self, x: np.ndarray) -> np.ndarray:
        """Per-class log-density scores, shape (K,) for a vector or (K, N)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        cols = x[:, None] if single else x
        if not np.all(np.isfinite(cols)):
            raise ValueError("input contains non-finite values")
        out = np.empty((len(self.models), cols.shape[1]))
        for k, (factor, hld) in enumerate(zip(self._factors, self._half_logdets)):
            z = sla.solve_triangular(factor[0], cols, lower=True)
            out[k] = -hld - 0.5 * np.einsum("ij,ij->j", z, z)
        return out[:, 0] if single else out

    def classify(self, x: np.ndarray) -> int:
        return int(np.argmax(self.log_scores(x)))

    def classify_batch(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.log_scores(x), axis=0)


def map_classify(x: np.ndarray, models) -> int:
    """Index of the MAP class of ``x`` among equiprobable Gaussian models."""
    return MapClassifier(models).classify(x)


def empirical_map_error(
    m1: GaussianClassModel, m2: GaussianClassModel, trials: int, seed
) -> ErrorEstimate:
    """Monte Carlo misclassification rate of the MAP rule on a model pair.

    Labels are drawn equiprobably; all randomness comes from one seeded
    generator with a fixed draw order, so the estimate is reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if m1.ambient_dim != m2.ambient_dim or m1.rank != m2.rank:
        raise ValueError("models must share ambient dimension and rank")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=trials)
    g = rng.standard_normal((m1.rank, trials))
    h = rng.standard_normal((m1.ambient_dim, trials))
    x = np.empty((m1.ambient_dim, trials))
    for k, m in enumerate((m1, m2)):
        sel = labels == k
        x[:, sel] = _mix(m, g[:, sel], h[:, sel])
    pred = MapClassifier((m1, m2)).classify_batch(x)
    failures = int(np.count_nonzero(pred != labels))
    return ErrorEstimate.from_bernoulli(failures, trials, _seed_int(seed))


def _seed_int(seed) -> int:
    try:
        return int(seed)
    except (TypeError, ValueError):
        return -1
