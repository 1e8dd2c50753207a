# Nearest Subspace Classifier, its projection-energy error kernel, and
# Monte Carlo evaluation of the kernel-integral bound.

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import PrincipalAngleSet, Subspace
from .gmm import ErrorEstimate, _seed_int


@dataclass(frozen=True)
class CoefficientSampler:
    """Deterministic source of subspace-coordinate vectors.

    ``draw(rng, count)`` fills a (dim, count) block. ``batch`` fixes the
    stream from (seed, tag), so the same (seed, index) always yields the
    same column: ``at(seed, i) == batch(seed, n)[:, i]`` for any n > i.
    """

    tag: str
    dim: int
    draw: Callable[[np.random.Generator, int], np.ndarray]

    def batch(self, seed, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(_stream_key(seed, self.tag))
        out = np.asarray(self.draw(rng, count), dtype=float)
        if out.shape != (self.dim, count):
            raise ValueError(f"sampler {self.tag!r} produced shape {out.shape}")
        return out

    def at(self, seed, index: int) -> np.ndarray:
        return self.batch(seed, index + 1)[:, index]


def _stream_key(seed, tag: str):
    # crc32 keeps the tag-derived key stable across processes
    return [zlib.crc32(tag.encode()), _seed_int(seed) % (2**63)]


def gaussian_coefficients(dim: int) -> CoefficientSampler:
    """Standard normal coordinates."""
    return CoefficientSampler("gaussian", dim, lambda rng, n: rng.standard_normal((dim, n)))


def uniform_coefficients(dim: int, low: float = -2.0, high: float = 2.0) -> CoefficientSampler:
    """Coordinates i.i.d. uniform on [low, high]."""
    return CoefficientSampler(
        f"uniform[{low},{high}]", dim, lambda rng, n: rng.uniform(low, high, size=(dim, n))
    )


def fixed_energy_coefficients(energies) -> CoefficientSampler:
    """Coordinates with fixed per-mode energy and random signs."""
    energies = np.asarray(energies, dtype=float)
    if np.any(energies < 0):
        raise ValueError("energies must be nonnegative")
    root = np.sqrt(energies)[:, None]

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice([-1.0, 1.0], size=(len(energies), n)) * root

    return CoefficientSampler(f"fixed_energy{list(energies)}", len(energies), draw)


def constant_coefficients(values) -> CoefficientSampler:
    """Always the same coordinate vector (useful for degenerate checks)."""
    values = np.asarray(values, dtype=float)
    return CoefficientSampler(
        f"constant{list(values)}",
        len(values),
        lambda rng, n: np.repeat(values[:, None], n, axis=1),
    )


class NscClassifier:
    """Pick the subspace capturing the most projection energy.

    Ties (including the two-class 'greater or equal' convention) resolve
    to the lowest index.
    """

    def __init__(self, subspaces):
        subspaces = list(subspaces)
        if len(subspaces) < 2:
            raise ValueError("need at least two subspaces")
        n = subspaces[0].ambient_dim
        if any(s.ambient_dim != n for s in subspaces):
            raise ValueError("subspaces must share an ambient dimension")
        self.subspaces = subspaces

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        cols = x[:, None] if single else x
        if not np.all(np.isfinite(cols)):
            raise ValueError("input contains non-finite values")
        out = np.stack(
            [np.einsum("ij,ij->j", s.basis.T @ cols, s.basis.T @ cols) for s in self.subspaces]
        )
        return out[:, 0] if single else out

    def classify(self, x: np.ndarray) -> int:
        return int(np.argmax(self.scores(x)))

    def classify_batch(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.scores(x), axis=0)


def nsc_classify(x: np.ndarray, subspaces) -> int:
    """Index of the nearest subspace by projection energy."""
    return NscClassifier(subspaces).classify(x)


def er_kernel(angle_set: PrincipalAngleSet, alpha: np.ndarray, sigma2: float) -> float:
    """Pairwise error kernel (1/2) exp(-S^2 / (8 s2 T)).

    S sums sin^2(theta_i) alpha_i^2 and T sums sin^2(theta_i)
    (alpha_i^2 + s2). When T = 0 (all angles zero) the classes are
    indistinguishable and the kernel takes its chance-level limit 1/2.
    """
    alpha = np.asarray(alpha, dtype=float)
    if len(alpha) != len(angle_set):
        raise ValueError("alpha length must match the number of angles")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return float(
        _er_kernel_cols(np.sin(angle_set.angles) ** 2, alpha[:, None] ** 2, sigma2)[0]
    )


def _er_kernel_cols(sin_sq: np.ndarray, alpha_sq: np.ndarray, sigma2: float) -> np.ndarray:
    num = np.sum(sin_sq[:, None] * alpha_sq, axis=0)
    den = 8.0 * sigma2 * np.sum(sin_sq[:, None] * (alpha_sq + sigma2), axis=0)
    out = np.full(num.shape, 0.5)
    ok = den > 0
    out[ok] = 0.5 * np.exp(-(num[ok] ** 2) / den[ok])
    return out


def nsc_bound_mc(
    angle_set: PrincipalAngleSet,
    sampler_p: CoefficientSampler,
    sampler_q: CoefficientSampler,
    sigma2: float,
    mc_samples: int = 100_000,
    seed=0,
) -> ErrorEstimate:
    """Monte Carlo value of the kernel integral against (p + q)/2.

    Draws alternate between the two samplers (half each); the standard
    error is the sample standard error of the kernel values.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    n_p = (mc_samples + 1) // 2
    n_q = mc_samples - n_p
    blocks = [sampler_p.batch(seed, n_p)]
    if n_q:
        blocks.append(sampler_q.batch(_seed_int(seed) + 1, n_q))
    alpha = np.hstack(blocks)
    vals = _er_kernel_cols(np.sin(angle_set.angles) ** 2, alpha**2, sigma2)
    mean = float(np.mean(vals))
    std_err = float(np.std(vals, ddof=1) / np.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return ErrorEstimate(mean, std_err, mc_samples, _seed_int(seed))


def empirical_nsc_error(
    s1: Subspace,
    s2: Subspace,
    sampler_p: CoefficientSampler,
    sampler_q: CoefficientSampler,
    sigma2: float,
    trials: int,
    seed=0,
) -> ErrorEstimate:
    """Monte Carlo NSC misclassification rate for samples near two subspaces.

    Each trial draws an equiprobable label, forms x = U alpha + noise and
    classifies with the projection-energy rule.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if s1.ambient_dim != s2.ambient_dim or s1.rank != s2.rank:
        raise ValueError("subspaces must share ambient dimension and rank")
    rng = np.random.default_rng(_stream_key(seed, "nsc-trials"))
    labels = rng.integers(0, 2, size=trials)
    noise = np.sqrt(sigma2) * rng.standard_normal((s1.ambient_dim, trials))
    a_p = sampler_p.batch(seed, trials)
    a_q = sampler_q.batch(_seed_int(seed) + 1, trials)
    x = np.where(labels == 0, s1.basis @ a_p, s2.basis @ a_q) + noise
    pred = NscClassifier((s1, s2)).classify_batch(x)
    failures = int(np.count_nonzero(pred != labels))
    return ErrorEstimate.from_bernoulli(failures, trials, _seed_int(seed))
