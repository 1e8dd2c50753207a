# Bhattacharyya bound on pairwise MAP error and its three regime-specific
# forms, plus the numeric inequalities the derivations rest on.

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .geometry import ZERO_ANGLE_TOL, intersection_split, principal_angles
from .gmm import GaussianClassModel

# Eigenvalues below this fraction of the largest are treated as zero when
# forming pseudo-determinants; consistent with the zero-angle tolerance.
PDET_REL_TOL = 1e-10

_KINDS = {"exact_bhattacharyya", "high_snr", "low_snr_pair", "moderate_snr"}


class RegimeViolation(ValueError):
    """An SNR-regime precondition does not hold for the given models."""


class ErrorFloor(ValueError):
    """Identical subspaces: the error does not vanish with the noise."""


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: a single value, or a (lower, upper) pair.

    Values are clamped to <= 1/2 on output (a larger bound is vacuous);
    unclamped values stay in the constants map.
    """

    kind: str
    value: float | None = None
    lower: float | None = None
    upper: float | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if self.kind == "low_snr_pair":
            if self.lower is None or self.upper is None:
                raise ValueError("pair bound needs lower and upper values")
            if not (0 < self.lower <= self.upper <= 0.5):
                raise ValueError("need 0 < lower <= upper <= 1/2")
        else:
            if self.value is None or not 0 < self.value <= 0.5:
                raise ValueError("bound value must lie in (0, 1/2]")


def _check_pair(m1: GaussianClassModel, m2: GaussianClassModel):
    if m1.ambient_dim != m2.ambient_dim:
        raise ValueError("models must share an ambient dimension")
    if m1.rank != m2.rank:
        raise ValueError("models must share a subspace rank")


def _logdet_model(m: GaussianClassModel) -> float:
    n, d = m.ambient_dim, m.rank
    return (n - d) * math.log(m.noise_var) + float(np.sum(np.log(m.eigenvalues + m.noise_var)))


def _signal_gram_eigs(m1: GaussianClassModel, m2: GaussianClassModel) -> np.ndarray:
    # nonzero spectrum of U1 L1 U1^T + U2 L2 U2^T through the 2d x 2d Gram
    f = np.hstack(
        [
            m1.subspace.basis * np.sqrt(m1.eigenvalues),
            m2.subspace.basis * np.sqrt(m2.eigenvalues),
        ]
    )
    w = np.linalg.eigvalsh(f.T @ f)
    return np.maximum(w, 0.0)


def bhattacharyya_K(m1: GaussianClassModel, m2: GaussianClassModel) -> float:
    """Bhattacharyya exponent between the two class Gaussians.

    Computed through log-determinants of structured factorizations; raw
    determinants would under/overflow well before n ~ 1e3.
    """
    _check_pair(m1, m2)
    if m1.noise_var == 0 or m2.noise_var == 0:
        raise ValueError("noise variance must be positive (singular covariance otherwise)")
    n = m1.ambient_dim
    mu = _signal_gram_eigs(m1, m2)
    logdet_avg = float(np.sum(np.log(mu / 2.0 + (m1.noise_var + m2.noise_var) / 2.0)))
    logdet_avg += (n - len(mu)) * math.log((m1.noise_var + m2.noise_var) / 2.0)
    k = 0.5 * logdet_avg - 0.25 * (_logdet_model(m1) + _logdet_model(m2))
    return max(k, 0.0)


def bhattacharyya_bound(m1: GaussianClassModel, m2: GaussianClassModel) -> float:
    """Upper bound (1/2) exp(-K) on the pairwise MAP error; lies in (0, 1/2]."""
    return 0.5 * math.exp(-bhattacharyya_K(m1, m2))


def _half_exp(expo: float) -> float:
    """(1/2) exp(expo) guarded against under/overflow, kept strictly positive."""
    raw = 0.5 * math.exp(min(expo, 700.0))
    return max(raw, 5e-324)


def _pseudo_det(eigs: np.ndarray) -> float:
    if len(eigs) == 0:
        return 1.0
    top = float(np.max(eigs))
    if top <= 0:
        return 1.0
    keep = eigs > PDET_REL_TOL * top
    return float(np.prod(eigs[keep]))


def high_snr_bound(
    m1: GaussianClassModel,
    m2: GaussianClassModel,
    zero_tol: float = ZERO_ANGLE_TOL,
) -> BoundReport:
    """Vanishing-noise error bound c1 (s2)^{(d-r)/2} / sqrt(prod sin^2).

    ``r`` is the subspace-intersection rank at ``zero_tol``; the constant
    combines the pseudo-determinant of the summed intersection parts with
    the difference-block eigenvalues.
    """
    _check_pair(m1, m2)
    if m1.noise_var <= 0 or m2.noise_var <= 0:
        raise ValueError("noise variance must be positive")
    split = intersection_split(m1, m2, zero_tol)
    d, r, n = m1.rank, split.rank, m1.ambient_dim
    if r == d:
        raise ErrorFloor(
            "subspaces are identical (r = d): error floor, the high-SNR bound is undefined"
        )
    if n < 2 * (d - r):
        raise ValueError(
            f"hypothesis n >= 2(d - r) violated: n = {n}, d = {d}, r = {r}"
        )

    sin_sq = float(np.prod(np.sin(split.angles.angles[r:]) ** 2))
    b1, b2 = split.intersection_bases
    e1, e2 = split.intersection_eigenvalues
    if r > 0:
        f = np.hstack([b1 * np.sqrt(e1), b2 * np.sqrt(e2)])
        pdet = _pseudo_det(np.maximum(np.linalg.eigvalsh(f.T @ f), 0.0))
        int_norm = math.sqrt(float(np.prod(e1) * np.prod(e2)))
    else:
        pdet, int_norm = 1.0, 1.0
    dif_prod = float(
        np.prod(np.sqrt(split.difference_eigenvalues[0] * split.difference_eigenvalues[1]))
    )
    c1 = 2.0 ** ((2 * d - r) / 2.0 - 1.0) * (pdet / int_norm * dif_prod) ** (-0.5)

    s2 = math.sqrt(m1.noise_var * m2.noise_var)  # equal in the model pair contract
    raw = max(c1 * s2 ** ((d - r) / 2.0) * sin_sq ** (-0.5), 5e-324)
    return BoundReport(
        kind="high_snr",
        value=min(raw, 0.5),
        constants={
            "c1": c1,
            "r": r,
            "sin_sq_product": sin_sq,
            "pseudo_det": pdet,
            "unclamped": raw,
        },
    )


def _low_snr_class_term(lam: np.ndarray, s2: float, half: bool) -> float:
    # common bracket of the c2/c3 constants; c2 halves the quadratic term
    quad = np.sum((lam / (2 * s2)) ** 2)
    if half:
        quad = 0.5 * quad
    return float(np.sum(lam / s2) - quad - np.sum(np.log1p(lam / s2)))


def low_snr_bounds(m1: GaussianClassModel, m2: GaussianClassModel) -> BoundReport:
    """Sandwich (lower_UB, upper_UB) of the Bhattacharyya bound at large noise."""
    _check_pair(m1, m2)
    if m1.noise_var <= 0 or m2.noise_var <= 0:
        raise ValueError("noise variance must be positive")
    s2 = math.sqrt(m1.noise_var * m2.noise_var)
    lam1, lam2 = m1.eigenvalues, m2.eigenvalues
    cos_sq = float(
        np.sum(np.cos(principal_angles(m1.subspace, m2.subspace).angles) ** 2)
    )
    c2 = (s2**2 / 4.0) * (
        _low_snr_class_term(lam1, s2, half=True) + _low_snr_class_term(lam2, s2, half=True)
    )
    c3 = (s2**2 / 4.0) * (
        _low_snr_class_term(lam1, s2, half=False) + _low_snr_class_term(lam2, s2, half=False)
    )
    lead = lam1[0] * lam2[0]
    expo_lower = -(c2 - lead * cos_sq / 16.0) / s2**2
    expo_upper = -(c3 - lead * cos_sq / 8.0) / s2**2
    raw_lower = _half_exp(expo_lower)
    raw_upper = _half_exp(expo_upper)
    return BoundReport(
        kind="low_snr_pair",
        lower=min(raw_lower, 0.5),
        upper=min(raw_upper, 0.5),
        constants={
            "c2": c2,
            "c3": c3,
            "sum_cos_sq": cos_sq,
            "exponent_lower": expo_lower,
            "exponent_upper": expo_upper,
            "unclamped_lower": raw_lower,
            "unclamped_upper": raw_upper,
        },
    )


def low_snr_spectrum_ok(m1: GaussianClassModel, m2: GaussianClassModel) -> bool:
    """Whether the log-det bracket behind the sandwich applies.

    True when the signal-average spectrum (U1 L1 U1^T + U2 L2 U2^T) / (2 s2)
    stays below 1, i.e. the noise dominates the class eigenvalues.
    """
    _check_pair(m1, m2)
    mu = _signal_gram_eigs(m1, m2)
    s2 = math.sqrt(m1.noise_var * m2.noise_var)
    return bool(np.max(mu, initial=0.0) / (2.0 * s2) < 1.0)


@dataclass(frozen=True)
class ModerateRegimeConstants:
    """Admissible-window constants for the intermediate-noise bound.

    ``l_of_p`` is the smallest point from which the quadratic minorant of
    log(1 + x) at p stays below the log on [l_of_p, p]; ``c_of_p`` is
    p / (2 l_of_p), or +inf when l_of_p = 0.
    """

    p: float
    l_of_p: float
    c_of_p: float


def _minorant_gap(lam: float, p: float) -> float:
    return (
        math.log1p(lam)
        - math.log1p(p)
        - (lam - p) / (1 + p)
        + (lam - p) ** 2 / (1 + p) ** 2
    )


def lemma1_constants(p: float) -> ModerateRegimeConstants:
    """Root of the minorant gap on [0, (p-1)/2) by bisection to 1e-12.

    The gap is monotone increasing on that interval and vanishes at p, so
    a sign change at 0 pins a unique root; a nonnegative gap at 0 means
    the minorant holds from 0 and c(p) is +inf.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if _minorant_gap(0.0, p) >= 0:
        return ModerateRegimeConstants(p=p, l_of_p=0.0, c_of_p=math.inf)
    root = bisect(_minorant_gap, 0.0, (p - 1) / 2.0, args=(p,), xtol=1e-12)
    return ModerateRegimeConstants(p=p, l_of_p=float(root), c_of_p=p / (2.0 * float(root)))


def moderate_snr_bound(
    m1: GaussianClassModel,
    m2: GaussianClassModel,
    p: float,
    zero_tol: float = ZERO_ANGLE_TOL,
) -> BoundReport:
    """Intermediate-noise error bound, valid for p/c(p) <= lambda/s2 <= p.

    The regime condition is checked eigenvalue by eigenvalue; a violation
    raises RegimeViolation naming the offender.
    """
    _check_pair(m1, m2)
    if m1.noise_var <= 0 or m2.noise_var <= 0:
        raise ValueError("noise variance must be positive")
    consts = lemma1_constants(p)
    lo = p / consts.c_of_p if math.isfinite(consts.c_of_p) else 0.0
    for idx, m in enumerate((m1, m2), start=1):
        ratios = m.eigenvalues / m.noise_var
        for j, ratio in enumerate(ratios):
            if not lo - 1e-12 <= ratio <= p + 1e-12:
                raise RegimeViolation(
                    f"class {idx} eigenvalue {j + 1}: lambda/s2 = {ratio:.6g} "
                    f"outside [{lo:.6g}, {p:.6g}]"
                )

    s2 = math.sqrt(m1.noise_var * m2.noise_var)
    d = m1.rank
    r = intersection_split(m1, m2, zero_tol).rank
    cos_sq = float(
        np.sum(np.cos(principal_angles(m1.subspace, m2.subspace).angles) ** 2)
    )
    lam1, lam2 = m1.eigenvalues, m2.eigenvalues
    c4 = 0.5 * (math.log1p(p) - p / (1 + p) - p**2 / (1 + p) ** 2)
    c5 = (
        -(1 + 3 * p) / (4 * s2 * (1 + p) ** 2) * float(np.sum(lam1) + np.sum(lam2))
        + float(np.sum(lam1**2) + np.sum(lam2**2)) / (8 * s2**2 * (1 + p) ** 2)
        + 0.25 * float(np.sum(np.log1p(lam1 / s2)) + np.sum(np.log1p(lam2 / s2)))
    )
    expo = -c4 * (2 * d - r) + lam1[0] * lam2[0] / (4 * s2**2 * (1 + p) ** 2) * cos_sq + c5
    raw = _half_exp(expo)
    return BoundReport(
        kind="moderate_snr",
        value=min(raw, 0.5),
        constants={
            "c4": c4,
            "c5": c5,
            "p": p,
            "L_of_p": consts.l_of_p,
            "c_of_p": consts.c_of_p,
            "r": r,
            "sum_cos_sq": cos_sq,
            "unclamped": raw,
        },
    )


def logdet_taylor_bounds(mat: np.ndarray) -> tuple[float, float]:
    """Bracket of ln det(I + D) for PSD D with spectrum below 1.

    Returns (tr D - tr(D^2)/2, tr D - tr(D^2)/4).
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("D must be square")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError("D must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if eigs[0] < -1e-10:
        raise ValueError("D must be positive semidefinite")
    if eigs[-1] >= 1.0:
        raise ValueError(f"largest eigenvalue {eigs[-1]:.6g} is not below 1")
    t1 = float(np.trace(mat))
    t2 = float(np.sum(mat * mat))  # tr(D^2) for symmetric D
    return t1 - 0.5 * t2, t1 - 0.25 * t2


def trace_product_bounds(
    u: np.ndarray, phi: np.ndarray, v: np.ndarray, psi: np.ndarray
) -> tuple[float, float]:
    """Bracket of tr(U Phi U^T V Psi V^T) via the angle cosines.

    ``phi`` and ``psi`` are the diagonals, nonnegative and descending;
    returns (phi_d psi_d S, phi_1 psi_1 S) with S the sum of squared
    cosines of the principal angles between the bases.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    for name, diag in (("phi", phi), ("psi", psi)):
        if diag.ndim != 1:
            raise ValueError(f"{name} must be a 1-D diagonal")
        if np.any(diag < 0):
            raise ValueError(f"{name} must be nonnegative")
        if np.any(np.diff(diag) > 1e-12):
            raise ValueError(f"{name} must be descending")
    d = len(phi)
    if u.shape[1] != d or v.shape[1] != len(psi) or len(psi) != d:
        raise ValueError("diagonal lengths must match the basis widths")
    for name, b in (("U", u), ("V", v)):
        if not np.allclose(b.T @ b, np.eye(b.shape[1]), atol=1e-8):
            raise ValueError(f"{name} must have orthonormal columns")
    cos_sq = float(np.sum(np.clip(np.linalg.svd(u.T @ v, compute_uv=False), 0, 1) ** 2))
    return phi[-1] * psi[-1] * cos_sq, phi[0] * psi[0] * cos_sq
