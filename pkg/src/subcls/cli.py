# Command-line experiment runner wiring the library into reproducible runs.

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import nsc
from .bounds import (
    ErrorFloor,
    RegimeViolation,
    bhattacharyya_bound,
    high_snr_bound,
    lemma1_constants,
    low_snr_bounds,
    low_snr_spectrum_ok,
    moderate_snr_bound,
)
from .data import LabeledDataset, case_models, case_subspaces, load_dataset
from .experiments import (
    ExperimentConfig,
    FIGURES,
    child_seed,
    equal_angle_subspaces,
    run_figure,
    write_figure_outputs,
)
from .geometry import chordal_distance_sq, principal_angles, ZERO_ANGLE_TOL
from .gmm import empirical_map_error
from .pipeline import classify_dataset, fit_class_subspaces
from .transforms import (
    LrtConfig,
    TraitConfig,
    load_transform,
    random_projection,
    save_transform,
    train_lda,
    train_lrt,
    train_trait,
)


def _parse_grid(spec: str) -> np.ndarray:
    """Grid syntax: 'a,b,c' literal, 'log:lo:hi:n' or 'lin:lo:hi:n'."""
    if spec.startswith("log:") or spec.startswith("lin:"):
        kind, lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        if count < 1:
            raise ValueError("grid needs at least one point")
        return np.geomspace(lo, hi, count) if kind == "log" else np.linspace(lo, hi, count)
    return np.asarray([float(v) for v in spec.split(",")])


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


def _write_manifest(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _fmt(value) -> str:
    return format(value, ".12g")


def _centered(train: LabeledDataset, others: list[LabeledDataset]):
    mean = train.samples.mean(axis=1, keepdims=True)
    out = [LabeledDataset(train.samples - mean, train.labels)]
    out.extend(LabeledDataset(d.samples - mean, d.labels) for d in others)
    return out


def _cmd_angles(args) -> int:
    if args.case is not None:
        subs = list(case_subspaces(args.case))
    else:
        dataset = load_dataset(args.dataset)
        if args.rank is None:
            raise ValueError("--rank is required with --dataset")
        subs = fit_class_subspaces(dataset, args.rank)
    pairs = 0
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            ang = principal_angles(subs[i], subs[j])
            degs = ", ".join(f"{v:.1f}" for v in np.degrees(ang.angles))
            r = int(np.count_nonzero(ang.angles < args.zero_tol))
            print(
                f"pair {i + 1}-{j + 1}: angles_deg: {degs}; "
                f"chordal_sq: {chordal_distance_sq(ang):.6f}; intersection_rank: {r}"
            )
            pairs += 1
    if pairs == 0:
        print("no subspace pairs (single class)")
    return 0


def _bounds_row(m1, m2, sigma2, p):
    flags = []
    exact = bhattacharyya_bound(m1, m2)
    try:
        high = _fmt(high_snr_bound(m1, m2).value)
    except (ErrorFloor, ValueError) as exc:
        high = ""
        flags.append(f"high_snr: {exc}")
    low = low_snr_bounds(m1, m2)
    if not low_snr_spectrum_ok(m1, m2):
        flags.append("low_snr: signal spectrum exceeds the noise (sandwich not guaranteed)")
    try:
        moderate = _fmt(moderate_snr_bound(m1, m2, p).value)
    except (RegimeViolation, ValueError) as exc:
        moderate = ""
        flags.append(f"moderate_snr: {exc}")
    return [
        _fmt(sigma2),
        _fmt(exact),
        high,
        _fmt(low.lower),
        _fmt(low.upper),
        moderate,
        "; ".join(flags) if flags else "ok",
    ]


def _cmd_bounds(args) -> int:
    grid = _parse_grid(args.sigma2)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for s2 in grid:
        m1, m2 = case_models(args.case, float(s2))
        rows.append(_bounds_row(m1, m2, float(s2), args.p))
    header = [
        "sigma2",
        "exact_bhattacharyya",
        "high_snr",
        "low_snr_lower",
        "low_snr_upper",
        "moderate_snr",
        "regime_flags",
    ]
    csv_path = _write_csv(os.path.join(args.out, f"bounds_case{args.case}.csv"), header, rows)
    consts = lemma1_constants(args.p)
    manifest = {
        "command": "bounds",
        "case": args.case,
        "p": args.p,
        "c_of_p": consts.c_of_p,
        "L_of_p": consts.l_of_p,
        "sigma2_grid": [float(v) for v in grid],
    }
    _write_manifest(os.path.join(args.out, f"bounds_case{args.case}_manifest.json"), manifest)
    print(csv_path)
    return 0


def _cmd_map_sim(args) -> int:
    grid = _parse_grid(args.sigma2)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for i, s2 in enumerate(grid):
        m1, m2 = case_models(args.case, float(s2))
        est = empirical_map_error(m1, m2, args.trials, child_seed(args.seed, "map-sim", args.case, i))
        rows.append([_fmt(s2), _fmt(est.mean), _fmt(est.std_err)])
    path = _write_csv(
        os.path.join(args.out, f"map_sim_case{args.case}.csv"),
        ["sigma2", "error", "error_stderr"],
        rows,
    )
    _write_manifest(
        os.path.join(args.out, f"map_sim_case{args.case}_manifest.json"),
        {
            "command": "map-sim",
            "case": args.case,
            "trials": args.trials,
            "seed": args.seed,
            "sigma2_grid": [float(v) for v in grid],
        },
    )
    print(path)
    return 0


def _cmd_nsc_sim(args) -> int:
    grid = _parse_grid(args.sigma2)
    os.makedirs(args.out, exist_ok=True)
    theta = np.radians(args.theta_deg)
    s1, s2 = equal_angle_subspaces(theta)
    angles = principal_angles(s1, s2)
    sampler = nsc.gaussian_coefficients(2)
    rows = []
    for i, s2n in enumerate(grid):
        emp = nsc.empirical_nsc_error(
            s1, s2, sampler, sampler, float(s2n), args.trials,
            child_seed(args.seed, "nsc-sim-emp", i),
        )
        bnd = nsc.nsc_bound_mc(
            angles, sampler, sampler, float(s2n), args.mc_samples,
            child_seed(args.seed, "nsc-sim-bound", i),
        )
        rows.append(
            [_fmt(s2n), _fmt(emp.mean), _fmt(emp.std_err), _fmt(bnd.mean), _fmt(bnd.std_err)]
        )
    tag = f"theta{args.theta_deg:g}"
    path = _write_csv(
        os.path.join(args.out, f"nsc_sim_{tag}.csv"),
        ["sigma2", "empirical", "empirical_stderr", "bound", "bound_stderr"],
        rows,
    )
    _write_manifest(
        os.path.join(args.out, f"nsc_sim_{tag}_manifest.json"),
        {
            "command": "nsc-sim",
            "theta_deg": args.theta_deg,
            "trials": args.trials,
            "mc_samples": args.mc_samples,
            "seed": args.seed,
            "sigma2_grid": [float(v) for v in grid],
        },
    )
    print(path)
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    if args.center:
        (dataset,) = _centered(dataset, [])
    if args.method == "trait":
        config = TraitConfig(target_dim=args.m, max_iters=args.max_iters)
        transform = train_trait(dataset, config, seed=args.seed)
    elif args.method == "lrt":
        transform = train_lrt(
            dataset, args.m, spectral_cap=args.spectral_cap,
            config=LrtConfig(), seed=args.seed,
        )
    elif args.method == "lda":
        transform = train_lda(dataset, args.m)
    else:
        transform = random_projection(dataset.dim, args.m, args.seed)
    save_transform(transform, args.out_file)
    print(
        json.dumps(
            {
                "method": transform.method,
                "m": transform.output_dim,
                "n": transform.input_dim,
                "final_objective": transform.meta.get("final_objective"),
                "path": args.out_file,
            }
        )
    )
    return 0


def _cmd_classify(args) -> int:
    train = load_dataset(args.train)
    test = load_dataset(args.test)
    if args.center:
        train, test = _centered(train, [test])
    transform = load_transform(args.transform) if args.transform else None
    report = classify_dataset(train, test, args.classifier, args.rank, transform)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_reproduce(args) -> int:
    overrides = {"figure": args.figure, "seed": args.seed}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.config:
        config = ExperimentConfig.from_json(args.config, **overrides)
    else:
        config = ExperimentConfig(**overrides)
    result = run_figure(config)
    paths = write_figure_outputs(result, args.out)
    if not args.no_plot:
        from .plotting import render_figure

        paths.append(render_figure(result, args.out))
    for path in paths:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subcls",
        description="Subspace classification experiments: principal angles, "
        "error bounds, simulators and feature-transform training.",
    )
    parser.add_argument("--seed", type=int, default=0, help="root RNG seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    parser.add_argument("--config", default=None, help="JSON experiment config path")
    # the same flags are accepted after the subcommand; explicit values win
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--trials", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("angles", help="principal angles between class subspaces")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--case", type=int, choices=(1, 2))
    group.add_argument("--dataset", help="labeled CSV dataset path")
    p.add_argument("--rank", type=int, default=None, help="subspace rank per class")
    p.add_argument("--zero-tol", type=float, default=ZERO_ANGLE_TOL)
    p.set_defaults(func=_cmd_angles)

    p = add_parser("bounds", help="tabulate error bounds over a noise grid")
    p.add_argument("--case", type=int, choices=(1, 2), required=True)
    p.add_argument("--sigma2", required=True, help="grid: 'a,b,c' or log:lo:hi:n or lin:lo:hi:n")
    p.add_argument("--p", type=float, default=6.0, help="moderate-regime eigenvalue cap")
    p.set_defaults(func=_cmd_bounds)

    p = add_parser("map-sim", help="empirical MAP error over a noise grid")
    p.add_argument("--case", type=int, choices=(1, 2), required=True)
    p.add_argument("--sigma2", required=True)
    p.set_defaults(func=_cmd_map_sim, default_trials=100_000)

    p = add_parser("nsc-sim", help="empirical NSC error and its bound")
    p.add_argument("--theta-deg", type=float, required=True, help="common principal angle")
    p.add_argument("--sigma2", required=True)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.set_defaults(func=_cmd_nsc_sim, default_trials=100_000)

    p = add_parser("train", help="learn a feature transform from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", choices=("trait", "lrt", "lda", "random"), required=True)
    p.add_argument("--m", type=int, required=True, help="output feature dimension")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--spectral-cap", type=float, default=1.0)
    p.add_argument("--center", action="store_true", help="remove the train mean first")
    p.add_argument("--out-file", required=True, help="transform container path")
    p.set_defaults(func=_cmd_train)

    p = add_parser("classify", help="fit on train data, report test accuracy")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--classifier", choices=("map", "nsc"), required=True)
    p.add_argument("--rank", type=int, required=True, help="class subspace rank")
    p.add_argument("--transform", default=None, help="transform container to apply")
    p.add_argument("--center", action="store_true", help="remove the train mean from both sets")
    p.set_defaults(func=_cmd_classify)

    p = add_parser("reproduce", help="write figure curve CSVs, manifest and plot")
    p.add_argument("--figure", choices=FIGURES, required=True)
    p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trials is None:
        args.trials = getattr(args, "default_trials", None)
    try:
        return args.func(args)
    except Exception as exc:  # surface one clean line, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
