# Synthetic experiment runners: every figure becomes curve CSV data plus a
# manifest that pins seeds, grids and constants.

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import nsc
from .bounds import high_snr_bound, lemma1_constants, low_snr_bounds, moderate_snr_bound
from .data import (
    LabeledDataset,
    case_models,
    gen_gmm_classes,
    gen_uniform_subspace_data,
    sample_gmm_dataset,
    sample_uniform_dataset,
)
from .geometry import Subspace, orthonormal_basis, principal_angles
from .gmm import covariance, empirical_map_error
from .pipeline import dense_map_error, fit_class_subspaces
from .transforms import (
    LinearTransform,
    LrtConfig,
    TraitConfig,
    random_projection,
    train_lda,
    train_lrt,
    train_trait,
)

FIGURES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig4", "fig5", "fig8")


@dataclass
class ExperimentConfig:
    """Knobs for a figure run; unset fields fall back to figure defaults."""

    figure: str
    seed: int = 0
    trials: int | None = None
    mc_samples: int | None = None
    sigma2_grid: list | None = None
    sigma_grid: list | None = None
    p: float = 6.0
    m: int | None = None
    m_list: list | None = None
    max_iters: int | None = None

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)


@dataclass
class Curve:
    name: str
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray


@dataclass
class FigureResult:
    figure: str
    curves: list[Curve] = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def child_seed(root: int, *tags) -> int:
    """Stable per-purpose seed derived from the root seed and a tag path."""
    crc = zlib.crc32("/".join(str(t) for t in tags).encode())
    return int(np.random.SeedSequence([root, crc]).generate_state(1, np.uint64)[0] % (2**62))


def run_figure(config: ExperimentConfig) -> FigureResult:
    if config.figure not in FIGURES:
        raise ValueError(f"unknown figure id {config.figure!r}; options: {', '.join(FIGURES)}")
    return globals()[f"_{config.figure}"](config)


# -- MAP regime figures -----------------------------------------------------


def _fig1a(cfg: ExperimentConfig) -> FigureResult:
    grid = np.asarray(cfg.sigma2_grid if cfg.sigma2_grid else np.geomspace(1e-6, 1e-2, 20))
    trials = cfg.trials or 100_000
    result = FigureResult("fig1a")
    consts = {}
    for case in (1, 2):
        emp = np.empty(len(grid))
        err = np.empty(len(grid))
        bnd = np.empty(len(grid))
        for i, s2 in enumerate(grid):
            m1, m2 = case_models(case, s2)
            est = empirical_map_error(m1, m2, trials, child_seed(cfg.seed, "fig1a", case, i))
            emp[i], err[i] = est.mean, est.std_err
            report = high_snr_bound(m1, m2)
            bnd[i] = report.value
            consts[f"case{case}"] = {
                "c1": report.constants["c1"],
                "r": report.constants["r"],
                "sin_sq_product": report.constants["sin_sq_product"],
            }
        result.curves.append(Curve(f"empirical_case{case}", grid, emp, err))
        result.curves.append(Curve(f"bound_case{case}", grid, bnd, np.zeros(len(grid))))
    result.manifest = {
        "figure": "fig1a",
        "seed": cfg.seed,
        "trials": trials,
        "sigma2_grid": grid.tolist(),
        "constants": consts,
    }
    return result


def _fig1b(cfg: ExperimentConfig) -> FigureResult:
    grid = np.asarray(cfg.sigma2_grid if cfg.sigma2_grid else np.geomspace(5.0, 50.0, 20))
    trials = cfg.trials or 100_000
    result = FigureResult("fig1b")
    consts = {}
    for case in (1, 2):
        emp = np.empty(len(grid))
        err = np.empty(len(grid))
        upper = np.empty(len(grid))
        c2s, c3s = [], []
        for i, s2 in enumerate(grid):
            m1, m2 = case_models(case, s2)
            est = empirical_map_error(m1, m2, trials, child_seed(cfg.seed, "fig1b", case, i))
            emp[i], err[i] = est.mean, est.std_err
            report = low_snr_bounds(m1, m2)
            upper[i] = report.upper
            c2s.append(report.constants["c2"])
            c3s.append(report.constants["c3"])
        consts[f"case{case}"] = {"c2": c2s, "c3": c3s}
        result.curves.append(Curve(f"empirical_case{case}", grid, emp, err))
        result.curves.append(Curve(f"upper_bound_case{case}", grid, upper, np.zeros(len(grid))))
    result.manifest = {
        "figure": "fig1b",
        "seed": cfg.seed,
        "trials": trials,
        "sigma2_grid": grid.tolist(),
        "constants": consts,
    }
    return result


def _fig1c(cfg: ExperimentConfig) -> FigureResult:
    p = cfg.p
    regime = lemma1_constants(p)
    if not np.isfinite(regime.c_of_p):
        raise ValueError(f"p = {p} gives an unbounded admissible window")
    grid = np.asarray(
        cfg.sigma2_grid
        if cfg.sigma2_grid
        else np.linspace(1.0 / p, regime.c_of_p / p, 20)
    )
    trials = cfg.trials or 100_000
    result = FigureResult("fig1c")
    consts = {"p": p, "c_of_p": regime.c_of_p, "L_of_p": regime.l_of_p}
    for case in (1, 2):
        emp = np.empty(len(grid))
        err = np.empty(len(grid))
        bnd = np.empty(len(grid))
        c5s = []
        for i, s2 in enumerate(grid):
            m1, m2 = case_models(case, s2)
            est = empirical_map_error(m1, m2, trials, child_seed(cfg.seed, "fig1c", case, i))
            emp[i], err[i] = est.mean, est.std_err
            report = moderate_snr_bound(m1, m2, p)
            bnd[i] = report.value
            c5s.append(report.constants["c5"])
            consts[f"case{case}_r"] = report.constants["r"]
            consts["c4"] = report.constants["c4"]
        consts[f"case{case}_c5"] = c5s
        result.curves.append(Curve(f"empirical_case{case}", grid, emp, err))
        result.curves.append(Curve(f"bound_case{case}", grid, bnd, np.zeros(len(grid))))
    result.manifest = {
        "figure": "fig1c",
        "seed": cfg.seed,
        "trials": trials,
        "sigma2_grid": grid.tolist(),
        "constants": consts,
    }
    return result


# -- NSC figures -------------------------------------------------------------


def equal_angle_subspaces(theta: float, ambient_dim: int = 6) -> tuple[Subspace, Subspace]:
    """Rank-2 pair in R^n whose two principal angles both equal theta."""
    if ambient_dim < 4:
        raise ValueError("need ambient dimension >= 4")
    u1 = np.zeros((ambient_dim, 2))
    u1[0, 0] = u1[1, 1] = 1.0
    u2 = np.zeros((ambient_dim, 2))
    u2[0, 0] = np.cos(theta)
    u2[4, 0] = np.sin(theta)
    u2[1, 1] = np.cos(theta)
    u2[5, 1] = np.sin(theta)
    return Subspace(u1), Subspace(u2)


def two_angle_subspaces(theta: float = np.pi / 6, ambient_dim: int = 6):
    """Rank-2 pair with principal angles theta and pi/2 - theta."""
    u1 = np.zeros((ambient_dim, 2))
    u1[0, 0] = u1[1, 1] = 1.0
    u2 = np.zeros((ambient_dim, 2))
    u2[0, 0] = np.cos(theta)
    u2[4, 0] = np.sin(theta)
    u2[1, 1] = np.sin(theta)
    u2[5, 1] = np.cos(theta)
    return Subspace(u1), Subspace(u2)


def _fig2a(cfg: ExperimentConfig) -> FigureResult:
    grid = np.asarray(cfg.sigma2_grid if cfg.sigma2_grid else np.geomspace(0.01, 0.5, 20))
    trials = cfg.trials or 100_000
    mc = cfg.mc_samples or 100_000
    thetas = {"pi_over_6": np.pi / 6, "pi_over_4": np.pi / 4, "pi_over_3": np.pi / 3}
    sampler = nsc.gaussian_coefficients(2)
    result = FigureResult("fig2a")
    for name, theta in thetas.items():
        s1, s2 = equal_angle_subspaces(theta)
        angles = principal_angles(s1, s2)
        emp = np.empty(len(grid))
        eerr = np.empty(len(grid))
        bnd = np.empty(len(grid))
        berr = np.empty(len(grid))
        for i, s2n in enumerate(grid):
            # seeds shared across theta so curves are comparable pointwise
            est = nsc.empirical_nsc_error(
                s1, s2, sampler, sampler, s2n, trials, child_seed(cfg.seed, "fig2a-emp", i)
            )
            emp[i], eerr[i] = est.mean, est.std_err
            b = nsc.nsc_bound_mc(
                angles, sampler, sampler, s2n, mc, child_seed(cfg.seed, "fig2a-bound", i)
            )
            bnd[i], berr[i] = b.mean, b.std_err
        result.curves.append(Curve(f"empirical_{name}", grid, emp, eerr))
        result.curves.append(Curve(f"bound_{name}", grid, bnd, berr))
    result.manifest = {
        "figure": "fig2a",
        "seed": cfg.seed,
        "trials": trials,
        "mc_samples": mc,
        "sigma2_grid": grid.tolist(),
        "thetas_rad": {k: float(v) for k, v in thetas.items()},
        "coefficients": "standard normal, matched seeds across theta",
    }
    return result


def _fig2b(cfg: ExperimentConfig) -> FigureResult:
    grid = np.asarray(cfg.sigma2_grid if cfg.sigma2_grid else np.geomspace(0.01, 0.5, 20))
    trials = cfg.trials or 100_000
    mc = cfg.mc_samples or 100_000
    s1, s2 = two_angle_subspaces(np.pi / 6)
    angles = principal_angles(s1, s2)
    energies = {"case3": (0.1, 0.9), "case4": (0.9, 0.1)}
    result = FigureResult("fig2b")
    for name, energy in energies.items():
        sampler = nsc.fixed_energy_coefficients(energy)
        emp = np.empty(len(grid))
        eerr = np.empty(len(grid))
        bnd = np.empty(len(grid))
        berr = np.empty(len(grid))
        for i, s2n in enumerate(grid):
            est = nsc.empirical_nsc_error(
                s1, s2, sampler, sampler, s2n, trials, child_seed(cfg.seed, "fig2b-emp", i)
            )
            emp[i], eerr[i] = est.mean, est.std_err
            b = nsc.nsc_bound_mc(
                angles, sampler, sampler, s2n, mc, child_seed(cfg.seed, "fig2b-bound", i)
            )
            bnd[i], berr[i] = b.mean, b.std_err
        result.curves.append(Curve(f"empirical_{name}", grid, emp, eerr))
        result.curves.append(Curve(f"bound_{name}", grid, bnd, berr))
    result.manifest = {
        "figure": "fig2b",
        "seed": cfg.seed,
        "trials": trials,
        "mc_samples": mc,
        "sigma2_grid": grid.tolist(),
        "angles_deg": np.degrees(angles.angles).tolist(),
        "mode_energies": energies,
        "note": "unit-energy coefficients with random signs; matched seeds across cases",
    }
    return result


# -- transform figures -------------------------------------------------------


def _vb_benchmark(cfg: ExperimentConfig, test_per_class: int = 10_000):
    """Shared 3-class, n = 10, d = 1 Gaussian benchmark."""
    models, train = gen_gmm_classes(
        3, 10, 1, 1e-2, child_seed(cfg.seed, "vb-models"), samples_per_class=100
    )
    test = sample_gmm_dataset(models, test_per_class, child_seed(cfg.seed, "vb-test"))
    return models, train, test


def _train_methods(train: LabeledDataset, m: int, cfg: ExperimentConfig):
    """The four learned transforms at output dimension m (LDA capped)."""
    trait_cfg = TraitConfig(target_dim=m, max_iters=cfg.max_iters or 10_000)
    k = train.num_classes
    return {
        "trait": train_trait(train, trait_cfg, seed=cfg.seed),
        "lrt": train_lrt(train, m, spectral_cap=1.0, config=LrtConfig(), seed=cfg.seed),
        "lda": train_lda(train, min(m, k - 1)),
        "random": random_projection(train.dim, m, child_seed(cfg.seed, "random-proj", m)),
    }


def _min_pairwise_angles_deg(dataset: LabeledDataset, rank: int) -> tuple[list, float]:
    subs = fit_class_subspaces(dataset, rank)
    pair_angles = []
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            ang = principal_angles(subs[i], subs[j]).angles
            pair_angles.append(float(np.degrees(ang.min())))
    return pair_angles, min(pair_angles)


def _fig4(cfg: ExperimentConfig) -> FigureResult:
    m = cfg.m or 3
    _, train, _ = _vb_benchmark(cfg, test_per_class=10)
    methods = _train_methods(train, m, cfg)
    rows = []
    orig_pairs, orig_min = _min_pairwise_angles_deg(train, 1)
    rows.append(["original", *[f"{a:.4f}" for a in orig_pairs], f"{orig_min:.4f}"])
    meta = {}
    for name, transform in methods.items():
        pairs, mn = _min_pairwise_angles_deg(transform.apply_dataset(train), 1)
        rows.append([name, *[f"{a:.4f}" for a in pairs], f"{mn:.4f}"])
        meta[name] = {
            "output_dim": transform.output_dim,
            "iterations": transform.meta.get("iterations"),
            "final_objective": transform.meta.get("final_objective"),
        }
    result = FigureResult("fig4")
    result.tables["angles"] = (
        ["method", "angle_12_deg", "angle_13_deg", "angle_23_deg", "min_angle_deg"],
        rows,
    )
    result.manifest = {
        "figure": "fig4",
        "seed": cfg.seed,
        "m": m,
        "benchmark": {"classes": 3, "dim": 10, "rank": 1, "noise_var": 1e-2, "train_per_class": 100},
        "methods": meta,
    }
    return result


def _fig5(cfg: ExperimentConfig) -> FigureResult:
    m_list = list(cfg.m_list) if cfg.m_list else list(range(3, 11))
    models, train, test = _vb_benchmark(cfg)
    covs = [covariance(m) for m in models]
    n_test = test.num_samples

    def pe_err(p):
        return float(np.sqrt(p * (1 - p) / n_test))

    pe_orig = dense_map_error(covs, test)
    series = {name: [] for name in ("trait", "lrt", "lda", "random")}
    meta = {"lda_caps": {}}
    for m in m_list:
        methods = _train_methods(train, m, cfg)
        meta["lda_caps"][str(m)] = methods["lda"].output_dim
        for name, transform in methods.items():
            tcovs = [transform.matrix @ c @ transform.matrix.T for c in covs]
            series[name].append(dense_map_error(tcovs, transform.apply_dataset(test)))
    x = np.asarray(m_list, dtype=float)
    result = FigureResult("fig5")
    result.curves.append(
        Curve("original", x, np.full(len(m_list), pe_orig), np.full(len(m_list), pe_err(pe_orig)))
    )
    for name, ys in series.items():
        ys = np.asarray(ys)
        result.curves.append(Curve(name, x, ys, np.asarray([pe_err(v) for v in ys])))
    result.manifest = {
        "figure": "fig5",
        "seed": cfg.seed,
        "m_list": m_list,
        "test_per_class": n_test // 3,
        "classifier": "map with exact transformed class covariances",
        "benchmark": {"classes": 3, "dim": 10, "rank": 1, "noise_var": 1e-2, "train_per_class": 100},
        "notes": meta,
    }
    return result


def _fig8(cfg: ExperimentConfig) -> FigureResult:
    m = cfg.m or 30
    grid = np.asarray(cfg.sigma_grid if cfg.sigma_grid else [0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    test_per_class = cfg.trials or 10_000
    bases, _ = gen_uniform_subspace_data(3, 100, 5, grid[0], child_seed(cfg.seed, "vc-bases"))

    def nsc_accuracy(train: LabeledDataset, test: LabeledDataset) -> float:
        pred = nsc.NscClassifier(fit_class_subspaces(train, 5)).classify_batch(test.samples) + 1
        return float(np.count_nonzero(pred == test.labels)) / test.num_samples

    acc = {name: np.empty(len(grid)) for name in ("original", "trait", "lrt")}
    trait_meta = []
    for i, sigma in enumerate(grid):
        train = sample_uniform_dataset(bases, sigma, 100, child_seed(cfg.seed, "vc-train", i))
        test = sample_uniform_dataset(
            bases, sigma, test_per_class, child_seed(cfg.seed, "vc-test", i)
        )
        acc["original"][i] = nsc_accuracy(train, test)
        trait_cfg = TraitConfig(target_dim=m, max_iters=cfg.max_iters or 2_000, obj_tol=1e-9)
        trait = train_trait(train, trait_cfg, seed=cfg.seed)
        trait_meta.append(
            {
                "sigma": float(sigma),
                "iterations": trait.meta["iterations"],
                "final_objective": trait.meta["final_objective"],
            }
        )
        acc["trait"][i] = nsc_accuracy(trait.apply_dataset(train), trait.apply_dataset(test))
        lrt = train_lrt(train, m, spectral_cap=1.0, config=LrtConfig(), seed=cfg.seed)
        acc["lrt"][i] = nsc_accuracy(lrt.apply_dataset(train), lrt.apply_dataset(test))
    result = FigureResult("fig8")
    for name in ("original", "trait", "lrt"):
        e = np.sqrt(np.maximum(acc[name] * (1 - acc[name]), 1e-12) / (3 * test_per_class))
        result.curves.append(Curve(f"accuracy_{name}", grid.astype(float), acc[name], e))
    result.manifest = {
        "figure": "fig8",
        "seed": cfg.seed,
        "m": m,
        "rank": 5,
        "sigma_grid": grid.tolist(),
        "train_per_class": 100,
        "test_per_class": test_per_class,
        "benchmark": {"classes": 3, "dim": 100, "rank": 5, "coefficients": "uniform[-2,2]"},
        "trait_training": trait_meta,
    }
    return result


# -- output writing ----------------------------------------------------------


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_figure_outputs(result: FigureResult, out_dir) -> list[str]:
    """Emit one CSV per curve/table plus the JSON manifest; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for curve in result.curves:
        lines = ["x_value,y_value,y_stderr"]
        for xv, yv, ev in zip(curve.x, curve.y, curve.yerr):
            lines.append(f"{xv:.17g},{yv:.17g},{ev:.17g}")
        path = os.path.join(out_dir, f"{result.figure}_{curve.name}.csv")
        _atomic_write(path, "\n".join(lines) + "\n")
        paths.append(path)
    for name, (header, rows) in result.tables.items():
        lines = [",".join(header)]
        lines.extend(",".join(str(v) for v in row) for row in rows)
        path = os.path.join(out_dir, f"{result.figure}_{name}.csv")
        _atomic_write(path, "\n".join(lines) + "\n")
        paths.append(path)
    manifest_path = os.path.join(out_dir, f"{result.figure}_manifest.json")
    _atomic_write(manifest_path, json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    paths.append(manifest_path)
    return paths
