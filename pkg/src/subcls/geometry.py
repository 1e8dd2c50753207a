# Subspace bases, principal angles and derived Grassmann quantities.

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Angles below this threshold (radians) count as zero, i.e. as directions
# shared by both subspaces.  arccos of an SVD cosine resolves angles only
# down to sqrt(2 eps) ~ 2e-8, so the threshold sits one decade above that
# noise floor and far below any meaningful angle.
ZERO_ANGLE_TOL = 1e-7

_ORTHO_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^n held as an orthonormal basis matrix.

    The basis is (n, d) with orthonormal columns; n is the ambient
    dimension and d the rank.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = _readonly(self.basis)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-D array")
        n, d = b.shape
        if d < 1 or n < d:
            raise ValueError(f"need 1 <= rank <= ambient_dim, got basis shape {b.shape}")
        gram = b.T @ b
        if not np.allclose(gram, np.eye(d), atol=_ORTHO_TOL):
            err = np.max(np.abs(gram - np.eye(d)))
            raise ValueError(f"basis columns not orthonormal (max deviation {err:.3e})")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class PrincipalAngleSet:
    """Ascending principal angles (radians) between two equal-rank subspaces."""

    angles: np.ndarray
    source_ranks: tuple[int, int]

    def __post_init__(self):
        a = _readonly(self.angles)
        if a.ndim != 1:
            raise ValueError("angles must be 1-D")
        if np.any(a < -1e-15) or np.any(a > np.pi / 2 + 1e-12):
            raise ValueError("angles must lie in [0, pi/2]")
        if np.any(np.diff(a) < -1e-12):
            raise ValueError("angles must be ascending")
        object.__setattr__(self, "angles", a)

    def __len__(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class IntersectionSplit:
    """Per-class split of a model pair into shared and non-shared directions.

    ``rank`` is the number of principal angles below the zero tolerance.
    For each class k the intersection block spans the shared subspace and
    the difference block spans its orthogonal complement inside that
    class's span.  Eigenvalues are obtained by compressing the class
    signal covariance onto each block and re-diagonalizing.
    """

    rank: int
    intersection_bases: tuple[np.ndarray, np.ndarray]
    intersection_eigenvalues: tuple[np.ndarray, np.ndarray]
    difference_bases: tuple[np.ndarray, np.ndarray]
    difference_eigenvalues: tuple[np.ndarray, np.ndarray]
    angles: PrincipalAngleSet = field(repr=False)


class SinSqProduct(NamedTuple):
    value: float
    all_excluded: bool


def orthonormal_basis(data: np.ndarray, rank: int) -> Subspace:
    """Top-``rank`` left singular subspace of a column-sample matrix.

    Parameters
    ----------
    data : (n, N) array
        Column samples.
    rank : int
        Number of leading singular directions to keep.

    Returns
    -------
    Subspace
        Basis with a deterministic sign convention: the largest-magnitude
        entry of every column is positive.

    Raises
    ------
    ValueError
        If fewer than ``rank`` singular values exceed 1e-12 (rank
        deficiency); the message names the achieved numerical rank.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D array")
    n, nsamp = data.shape
    if nsamp < 1:
        raise ValueError("need at least one sample column")
    if not 1 <= rank <= min(n, nsamp):
        raise ValueError(f"rank must be in [1, min(n, N)] = [1, {min(n, nsamp)}], got {rank}")
    u, s, _ = np.linalg.svd(data, full_matrices=False)
    achieved = int(np.count_nonzero(s > 1e-12))
    if achieved < rank:
        raise ValueError(
            f"rank-deficient data: requested rank {rank} but numerical rank is {achieved}"
        )
    basis = u[:, :rank].copy()
    return Subspace(_fix_column_signs(basis))


def _fix_column_signs(basis: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def principal_angles(s1: Subspace, s2: Subspace) -> PrincipalAngleSet:
    """Principal angles between two equal-rank subspaces.

    The cosines of the angles are the singular values of ``X1^T X2`` for
    the two orthonormal bases; singular values are clamped into [0, 1]
    before arccos to absorb round-off.
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise ValueError(
            f"ambient dimension mismatch: {s1.ambient_dim} vs {s2.ambient_dim}"
        )
    if s1.rank != s2.rank:
        raise ValueError(f"rank mismatch: {s1.rank} vs {s2.rank}")
    svals = np.linalg.svd(s1.basis.T @ s2.basis, compute_uv=False)
    svals = np.clip(svals, 0.0, 1.0)
    # singular values come out descending, so arccos is ascending
    return PrincipalAngleSet(np.arccos(svals), (s1.rank, s2.rank))


def chordal_distance_sq(angle_set: PrincipalAngleSet) -> float:
    """Squared chordal distance: the sum of squared sines of the angles."""
    return float(np.sum(np.sin(angle_set.angles) ** 2))


def product_sin_sq_nonzero(
    angle_set: PrincipalAngleSet, zero_tol: float = ZERO_ANGLE_TOL
) -> SinSqProduct:
    """Product of sin^2 over the angles at or above ``zero_tol``.

    An empty product is 1; ``all_excluded`` flags that every angle fell
    below the tolerance (identical subspaces).
    """
    keep = angle_set.angles >= zero_tol
    value = float(np.prod(np.sin(angle_set.angles[keep]) ** 2))
    return SinSqProduct(value, not bool(np.any(keep)))


def _compress_block(signal_cov_factor: np.ndarray, block: np.ndarray):
    """Re-diagonalize a signal covariance F F^T restricted to a block span.

    Returns an orthonormal basis of the block span aligned with the
    compressed covariance's eigenvectors, plus descending eigenvalues.
    """
    if block.shape[1] == 0:
        return block, np.zeros(0)
    m = block.T @ signal_cov_factor
    small = m @ m.T
    w, q = np.linalg.eigh((small + small.T) / 2)
    order = np.argsort(w)[::-1]
    return block @ q[:, order], np.maximum(w[order], 0.0)


def intersection_split(m1, m2, zero_tol: float = ZERO_ANGLE_TOL) -> IntersectionSplit:
    """Split two Gaussian class models around their subspace intersection.

    ``m1`` and ``m2`` carry ``subspace``, ``eigenvalues`` and ``noise_var``
    attributes.  The intersection rank r is the multiplicity of principal
    angles below ``zero_tol``; r = 0 and r = d are both legal.
    """
    s1, s2 = m1.subspace, m2.subspace
    ang = principal_angles(s1, s2)
    r = int(np.count_nonzero(ang.angles < zero_tol))
    v, svals, wt = np.linalg.svd(s1.basis.T @ s2.basis)
    # principal vectors: columns i of U1 V and U2 W pair up at angle theta_i,
    # ordered by descending cosine = ascending angle
    p1 = s1.basis @ v
    p2 = s2.basis @ wt.T

    out_int_bases, out_int_eigs, out_dif_bases, out_dif_eigs = [], [], [], []
    for model, pvecs in ((m1, p1), (m2, p2)):
        lam = np.asarray(model.eigenvalues, dtype=float)
        factor = model.subspace.basis * np.sqrt(lam)
        bi, ei = _compress_block(factor, pvecs[:, :r])
        bd, ed = _compress_block(factor, pvecs[:, r:])
        out_int_bases.append(bi)
        out_int_eigs.append(ei)
        out_dif_bases.append(bd)
        out_dif_eigs.append(ed)

    return IntersectionSplit(
        rank=r,
        intersection_bases=(out_int_bases[0], out_int_bases[1]),
        intersection_eigenvalues=(out_int_eigs[0], out_int_eigs[1]),
        difference_bases=(out_dif_bases[0], out_dif_bases[1]),
        difference_eigenvalues=(out_dif_eigs[0], out_dif_eigs[1]),
        angles=ang,
    )
