# Feature-extraction transforms: Gram-target gradient descent (TRAIT), the
# closed-form Gram fit, and the LRT / LDA / random-projection baselines.

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.linalg as sla

from .data import LabeledDataset


@dataclass(frozen=True)
class LinearTransform:
    """An m x n feature-extraction matrix with its training provenance."""

    matrix: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if mat.shape[0] > mat.shape[1]:
            raise ValueError("target dimension m must not exceed the input dimension n")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix contains non-finite entries")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.input_dim:
            raise ValueError(
                f"transform expects {self.input_dim}-dimensional columns, got {x.shape[0]}"
            )
        return self.matrix @ x

    def apply_dataset(self, dataset: LabeledDataset) -> LabeledDataset:
        return LabeledDataset(self.apply(dataset.samples), dataset.labels)


@dataclass(frozen=True)
class TargetGram:
    """Block-diagonal target for the transformed Gram matrix."""

    block_sizes: tuple
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        total = int(sum(self.block_sizes))
        if mat.shape != (total, total):
            raise ValueError("matrix shape must match the block sizes")
        if not np.allclose(mat, mat.T, atol=1e-10):
            raise ValueError("target Gram must be symmetric")
        mask = np.zeros_like(mat, dtype=bool)
        offset = 0
        for size in self.block_sizes:
            mask[offset : offset + size, offset : offset + size] = True
            offset += size
        if np.any(mat[~mask] != 0.0):
            raise ValueError("off-block entries must be exactly zero")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))


@dataclass(frozen=True)
class TraitConfig:
    """Gradient-descent settings for the Gram-target objective.

    Backtracking starts each step from twice the last accepted size
    (capped at eta0 on the first step) and halves until the slope
    condition holds. Stopping: gradient norm below grad_tol * (1 + J),
    relative objective decrease below obj_tol (0 disables), or max_iters.
    """

    target_dim: int
    max_iters: int = 10_000
    eta0: float = 1.0
    backtrack: float = 0.5
    slope: float = 1e-4
    grad_tol: float = 1e-6
    obj_tol: float = 0.0

    def __post_init__(self):
        if self.target_dim < 1 or self.max_iters < 1:
            raise ValueError("target_dim and max_iters must be positive")
        if self.eta0 <= 0 or not 0 < self.backtrack < 1 or self.slope <= 0:
            raise ValueError("need eta0 > 0, backtrack in (0,1), slope > 0")
        if self.grad_tol < 0 or self.obj_tol < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass(frozen=True)
class LrtConfig:
    """Projected-subgradient settings for the nuclear-norm baseline.

    Steps are eta0 / (sqrt(t) * ||g||_F); the spectral cap is enforced by
    singular-value clipping and the best iterate by objective is kept.
    """

    iterations: int = 500
    eta0: float = 0.3

    def __post_init__(self):
        if self.iterations < 1 or self.eta0 <= 0:
            raise ValueError("iterations and eta0 must be positive")


def _as_matrix(a) -> np.ndarray:
    return a.matrix if isinstance(a, LinearTransform) else np.asarray(a, dtype=float)


def _as_gram(t) -> np.ndarray:
    return t.matrix if isinstance(t, TargetGram) else np.asarray(t, dtype=float)


def build_target_gram(dataset: LabeledDataset) -> TargetGram:
    """Per-class Gram blocks X_k^T X_k on the diagonal, classes in order."""
    sizes = []
    blocks = []
    for label in range(1, dataset.num_classes + 1):
        xk = dataset.class_matrix(label)
        if xk.shape[1] == 0:
            raise ValueError(f"class {label} is empty")
        sizes.append(xk.shape[1])
        blocks.append(xk.T @ xk)
    total = sum(sizes)
    mat = np.zeros((total, total))
    offset = 0
    for size, block in zip(sizes, blocks):
        mat[offset : offset + size, offset : offset + size] = (block + block.T) / 2
        offset += size
    return TargetGram(tuple(sizes), mat)


def trait_objective(a, x: np.ndarray, t) -> float:
    """Mean squared Gram mismatch (1/N^2) || (AX)^T (AX) - T ||_F^2."""
    a = _as_matrix(a)
    x = np.asarray(x, dtype=float)
    t = _as_gram(t)
    y = a @ x
    diff = y.T @ y - t
    return float(np.sum(diff * diff)) / x.shape[1] ** 2


def trait_gradient(a, x: np.ndarray, t) -> np.ndarray:
    """Descent direction A (XX^T A^T A XX^T - X T X^T).

    The exact gradient of the objective is (4/N^2) times this; the
    constant is absorbed by the line search.
    """
    a = _as_matrix(a)
    x = np.asarray(x, dtype=float)
    t = _as_gram(t)
    xxt = x @ x.T
    return a @ (xxt @ a.T @ a @ xxt - x @ t @ x.T)


class _TraitProblem:
    """Cached products so each iteration costs O(n^2 m), not O(N^2 m)."""

    def __init__(self, x: np.ndarray, t: np.ndarray):
        self.n, self.num = x.shape
        self.gram_x = x @ x.T
        self.xtxt = x @ t @ x.T
        self.t_sq = float(np.sum(t * t))

    def objective(self, a: np.ndarray) -> float:
        p = a.T @ a
        pg = p @ self.gram_x
        val = np.trace(pg @ pg) - 2.0 * np.sum(p * self.xtxt) + self.t_sq
        return float(val) / self.num**2

    def gradient(self, a: np.ndarray) -> np.ndarray:
        return a @ (self.gram_x @ a.T @ a @ self.gram_x - self.xtxt)


def train_trait(dataset: LabeledDataset, config: TraitConfig, seed=0) -> LinearTransform:
    """Gradient descent with backtracking on the Gram-target objective.

    Starts from the first m standard-basis rows; the objective is
    nonincreasing across accepted steps. Training uses the class-grouped
    sample order so the target blocks line up.
    """
    grouped = dataset.grouped()
    x = grouped.samples
    n = grouped.dim
    m = config.target_dim
    if m > n:
        raise ValueError(f"target_dim {m} exceeds the data dimension {n}")
    target = build_target_gram(grouped)
    prob = _TraitProblem(x, target.matrix)

    a = np.eye(m, n)
    obj = prob.objective(a)
    eta = config.eta0
    steps: list[float] = []
    stop = "max_iters"
    iters = 0
    for it in range(config.max_iters):
        if not np.isfinite(obj):
            raise FloatingPointError(f"objective became non-finite at iteration {it}")
        grad = prob.gradient(a)
        grad_sq = float(np.sum(grad * grad))
        if np.sqrt(grad_sq) < config.grad_tol * (1.0 + obj):
            stop = "grad_tol"
            break
        # descent rate of the true gradient along -grad
        rate = 4.0 / prob.num**2 * grad_sq
        eta = min(eta * 2.0, config.eta0) if it == 0 else eta * 2.0
        while True:
            candidate = a - eta * grad
            cand_obj = prob.objective(candidate)
            if cand_obj <= obj - config.slope * eta * rate:
                break
            eta *= config.backtrack
            if eta < 1e-30:
                break
        if eta < 1e-30:
            stop = "stalled"
            break
        rel_dec = (obj - cand_obj) / max(obj, 1e-300)
        a, obj = candidate, cand_obj
        steps.append(eta)
        iters = it + 1
        if config.obj_tol > 0 and rel_dec < config.obj_tol:
            stop = "obj_tol"
            break

    meta = {
        "iterations": iters,
        "final_objective": obj,
        "initial_objective": prob.objective(np.eye(m, n)),
        "stop_reason": stop,
        "step_sizes": steps,
        "seed": seed,
        "config": asdict(config),
    }
    return LinearTransform(a, "trait", meta)


def closed_form_gram_fit(x: np.ndarray, t) -> np.ndarray:
    """Unconstrained minimizer (XX^T)^-1 X T X^T (XX^T)^-1 of the Gram fit.

    Requires XX^T to be well conditioned; an ill-conditioned Gram raises
    instead of silently regularizing (add a ridge upstream if wanted).
    """
    x = np.asarray(x, dtype=float)
    t = _as_gram(t)
    gram = x @ x.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= 1e12:
        raise ValueError(
            f"XX^T condition number {cond:.3e} >= 1e12; "
            "consider a ridge fallback before fitting"
        )
    rhs = x @ t @ x.T
    p = np.linalg.solve(gram, np.linalg.solve(gram, rhs).T).T
    return (p + p.T) / 2


def _nuclear_subgradient(mat: np.ndarray) -> tuple[np.ndarray, float]:
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    return u @ vt, float(np.sum(s))


def train_lrt(
    dataset: LabeledDataset,
    m: int,
    spectral_cap: float = 1.0,
    config: LrtConfig | None = None,
    seed=0,
) -> LinearTransform:
    """Projected subgradient descent on sum_k ||A X_k||_* - ||A X||_*.

    The SVD subdifferential U V^T of each term feeds normalized steps;
    iterates are projected onto the spectral-norm ball by clipping
    singular values, and the best iterate by objective is returned.
    """
    if spectral_cap <= 0:
        raise ValueError("spectral_cap must be positive")
    config = config or LrtConfig()
    grouped = dataset.grouped()
    x = grouped.samples
    n = grouped.dim
    if m > n:
        raise ValueError(f"m = {m} exceeds the data dimension {n}")
    class_blocks = [grouped.class_matrix(k) for k in range(1, grouped.num_classes + 1)]

    a = np.eye(m, n) * min(1.0, spectral_cap)
    best = a.copy()
    best_obj = np.inf
    objs: list[float] = []
    for t in range(1, config.iterations + 1):
        sub = np.zeros_like(a)
        obj = 0.0
        for xk in class_blocks:
            uv, nn = _nuclear_subgradient(a @ xk)
            sub += uv @ xk.T
            obj += nn
        uv, nn = _nuclear_subgradient(a @ x)
        sub -= uv @ x.T
        obj -= nn
        objs.append(obj)
        if obj < best_obj:
            best_obj, best = obj, a.copy()
        norm = np.linalg.norm(sub)
        if norm == 0:
            break
        a = a - (config.eta0 / np.sqrt(t) / norm) * sub
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        a = u @ (np.minimum(s, spectral_cap)[:, None] * vt)

    meta = {
        "iterations": len(objs),
        "final_objective": best_obj,
        "initial_objective": objs[0] if objs else 0.0,
        "spectral_cap": spectral_cap,
        "seed": seed,
        "config": asdict(config),
    }
    return LinearTransform(best, "lrt", meta)


def train_lda(dataset: LabeledDataset, m: int) -> LinearTransform:
    """Fisher discriminant rows from the regularized generalized eigenproblem.

    Strict LDA caps m at min(n, K - 1); the within-class scatter gets a
    small ridge so the eigenproblem stays defined when N_k < n.
    """
    n = dataset.dim
    k = dataset.num_classes
    if not 1 <= m <= min(n, k - 1):
        raise ValueError(f"m must be in [1, min(n, K - 1)] = [1, {min(n, k - 1)}], got {m}")
    mean_all = dataset.samples.mean(axis=1, keepdims=True)
    s_w = np.zeros((n, n))
    s_b = np.zeros((n, n))
    for label in range(1, k + 1):
        xk = dataset.class_matrix(label)
        mu = xk.mean(axis=1, keepdims=True)
        centered = xk - mu
        s_w += centered @ centered.T
        s_b += xk.shape[1] * (mu - mean_all) @ (mu - mean_all).T
    gamma = 1e-6 * np.trace(s_w) / n
    vals, vecs = sla.eigh(s_b, s_w + gamma * np.eye(n))
    rows = vecs[:, np.argsort(vals)[::-1][:m]].T
    meta = {"regularizer": gamma, "generalized_eigenvalues": np.sort(vals)[::-1][:m].tolist()}
    return LinearTransform(rows, "lda", meta)


def random_projection(n: int, m: int, seed) -> LinearTransform:
    """m x n matrix of i.i.d. standard normal entries, fixed by the seed."""
    if m > n:
        raise ValueError("m must not exceed n")
    mat = np.random.default_rng(seed).standard_normal((m, n))
    return LinearTransform(mat, "random", {"seed": _plain(seed)})


def identity_transform(n: int) -> LinearTransform:
    return LinearTransform(np.eye(n), "identity", {})


def _plain(value):
    try:
        json.dumps(value)
        return value
    except TypeError:
        return repr(value)


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, default=repr)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def save_transform(transform: LinearTransform, path) -> None:
    """Write the container: a JSON header line, then the row-major matrix."""
    config = transform.meta.get("config", {})
    header = {
        "method": transform.method,
        "m": transform.output_dim,
        "n": transform.input_dim,
        "seed": _plain(transform.meta.get("seed", None)),
        "config": _plain(config),
        "config_hash": _config_hash(config if isinstance(config, dict) else {}),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for row in transform.matrix:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def load_transform(path) -> LinearTransform:
    """Read a transform container written by save_transform."""
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        rows = [[float(v) for v in line.split()] for line in fh if line.strip()]
    mat = np.array(rows)
    if mat.shape != (header["m"], header["n"]):
        raise ValueError(
            f"matrix shape {mat.shape} does not match header ({header['m']}, {header['n']})"
        )
    meta = {"seed": header.get("seed"), "config": header.get("config", {})}
    return LinearTransform(mat, header["method"], meta)
