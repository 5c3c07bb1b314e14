"""Deterministic command-line front end.

One JSON config document drives every verb; outputs are written atomically
and floats are formatted with shortest round-trip reprs, so a repeated run
with the same config and seed produces byte-identical artifacts. Exit codes:
0 ok, 2 config error, 3 numerically infeasible, 4 tolerance miss.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .control import InfeasibleControlError, SingularGramianError
from .doubling import build_double, extend_pair, extended_eigenbasis, lift_region, split
from .grid import (
    Coefficients,
    ControlRegion,
    EmptyRegionError,
    Grid1D,
    ResolutionError,
    fat_cantor_region,
    make_coefficients,
    make_uniform_grid,
    parse_region_spec,
    write_mask_file,
)
from .operators import BoundaryCondition, NumericalError, assemble_laplacian, eigendecompose
from .sim import DEFAULT_TOLERANCES, run_simultaneous
from .specineq import estimate_constant_l2, estimate_constant_lp, fit_exponential, simultaneous_constant
from .spectral import l2_norm, make_cutoff, project, sup_norm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_TOLERANCE = 4


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Resolved run parameters; every field lands in the summary for provenance."""

    n: int
    length: float = 1.0
    coefficients: Any = "constant"
    region: str | None = None
    T: float = 1.0
    method: str = "hum"
    lambda0: float | None = None
    lambda_sweep: list[float] = field(default_factory=list)
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: str = "."
    cantor_measure: float | None = None
    cantor_depth: int | None = None
    bc: str = "dirichlet"
    steps: int | None = None


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "n" not in raw:
        raise ConfigError("config must set n")
    cfg = ExperimentConfig(**raw)
    if not isinstance(cfg.n, int) or cfg.n < 2:
        raise ConfigError(f"n must be an integer >= 2, got {cfg.n!r}")
    if cfg.length <= 0 or cfg.T <= 0:
        raise ConfigError("length and T must be positive")
    if cfg.method not in DEFAULT_TOLERANCES:
        raise ConfigError(f"method must be one of {sorted(DEFAULT_TOLERANCES)}")
    if cfg.bc not in ("dirichlet", "neumann"):
        raise ConfigError("bc must be 'dirichlet' or 'neumann'")
    if any(l <= 0 for l in cfg.lambda_sweep):
        raise ConfigError("lambda_sweep entries must be positive")
    return cfg


def build_problem(cfg: ExperimentConfig) -> tuple[Grid1D, Coefficients]:
    spec = cfg.coefficients
    if spec == "constant":
        grid = make_uniform_grid(cfg.n, cfg.length)
        return grid, make_coefficients(grid)
    if isinstance(spec, dict) and set(spec) == {"kappa", "a"}:
        kappa = np.asarray(spec["kappa"], dtype=float)
        a = np.asarray(spec["a"], dtype=float)
        if kappa.shape != (cfg.n,) or a.shape != (cfg.n + 1,):
            raise ConfigError(
                f"sampled coefficients need {cfg.n} kappa and {cfg.n + 1} a entries"
            )
        h = cfg.length / cfg.n
        centers = (np.arange(cfg.n) + 0.5) * h
        grid = Grid1D(n=cfg.n, length=cfg.length, h=h, centers=centers, weights=h * kappa)
        return grid, Coefficients(kappa=kappa, a=a)
    raise ConfigError("coefficients must be 'constant' or {'kappa': [...], 'a': [...]}")


def _fmt(x: float) -> str:
    if np.isinf(x):
        return "INF"
    return repr(float(x))


def _write_text(path: str, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj: Any) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolved(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def _seeded_unit_pair(grid: Grid1D, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    u0 = rng.standard_normal(grid.n)
    v0 = rng.standard_normal(grid.n)
    return u0 / l2_norm(grid, u0), v0 / l2_norm(grid, v0)


def cmd_double_check(cfg: ExperimentConfig, outdir: str) -> int:
    grid, coeffs = build_problem(cfg)
    dd = build_double(grid, coeffs)
    basis_d = eigendecompose(assemble_laplacian(grid, coeffs, BoundaryCondition.DIRICHLET))
    basis_n = eigendecompose(assemble_laplacian(grid, coeffs, BoundaryCondition.NEUMANN))
    basis_p = eigendecompose(dd.operator)
    ext = extended_eigenbasis(dd, basis_d, basis_n)

    union = np.sort(np.concatenate([basis_d.eigenvalues, basis_n.eigenvalues]))
    denom = np.maximum(np.maximum(np.abs(union), np.abs(basis_p.eigenvalues)), 1.0)
    spectrum_res = float(np.max(np.abs(union - basis_p.eigenvalues) / denom))

    A = dd.operator.matrix
    ext_res = 0.0
    for k in range(ext.vectors.shape[1]):
        e = ext.vectors[:, k]
        r = A @ e - ext.eigenvalues[k] * e
        ext_res = max(ext_res, l2_norm(dd.doubled, r) / max(ext.eigenvalues[k], 1.0))

    rng = np.random.default_rng(cfg.seed)
    link_res = 0.0
    roundtrip_res = 0.0
    freqs = ext.frequencies
    for _ in range(20):
        u = rng.standard_normal(grid.n)
        v = rng.standard_normal(grid.n)
        lam = float(rng.uniform(0.0, freqs[-1] * 1.05))
        U = extend_pair(dd, u, v)
        PU = project(ext, make_cutoff(ext, lam), U)
        pu, pv = split(dd, PU)
        pd = project(basis_d, make_cutoff(basis_d, lam), u)
        pn = project(basis_n, make_cutoff(basis_n, lam), v)
        scale = max(sup_norm(pd) + sup_norm(pn), 1.0)
        link_res = max(link_res, sup_norm(pu - pd) / scale, sup_norm(pv - pn) / scale)
        ru, rv = split(dd, U)
        roundtrip_res = max(roundtrip_res, sup_norm(ru - u), sup_norm(rv - v))

    checks = {
        "spectrum_union": {"max_residual": spectrum_res, "pass": spectrum_res <= 1e-9},
        "extension_eigenvectors": {"max_residual": ext_res, "pass": ext_res <= 1e-10},
        "link_identity": {"max_residual": link_res, "pass": link_res <= 1e-10},
        # identity up to the one rounded addition each of extend and split performs
        "split_roundtrip": {"max_residual": roundtrip_res, "pass": roundtrip_res <= 1e-12},
    }
    for name, basis in (("dirichlet", basis_d), ("neumann", basis_n), ("double", basis_p)):
        lines = ["k,eigenvalue"]
        lines += [f"{k},{_fmt(val)}" for k, val in enumerate(basis.eigenvalues)]
        _write_text(os.path.join(outdir, f"spectrum_{name}.csv"), "\n".join(lines) + "\n")
    all_pass = all(c["pass"] for c in checks.values())
    _write_json(
        os.path.join(outdir, "double_check.json"),
        {"checks": checks, "all_pass": all_pass, "config": _resolved(cfg)},
    )
    return EXIT_OK if all_pass else EXIT_TOLERANCE


def cmd_specineq(cfg: ExperimentConfig, outdir: str, threads: int) -> int:
    grid, coeffs = build_problem(cfg)
    if not cfg.lambda_sweep:
        raise ConfigError("specineq needs a nonempty lambda_sweep")
    if cfg.region is None:
        raise ConfigError("specineq needs a region")
    region = parse_region_spec(cfg.region, grid)
    dd = build_double(grid, coeffs)
    basis_d = eigendecompose(assemble_laplacian(grid, coeffs, BoundaryCondition.DIRICHLET))
    basis_n = eigendecompose(assemble_laplacian(grid, coeffs, BoundaryCondition.NEUMANN))
    ext = extended_eigenbasis(dd, basis_d, basis_n)
    lifted = lift_region(dd, region)

    per_family: dict[str, tuple[list[str], list]] = {
        "dirichlet": ([], []),
        "neumann": ([], []),
        "simultaneous": ([], []),
    }

    def record(family: str, est_lp, est_l2) -> None:
        lines, lp_estimates = per_family[family]
        for est in (est_lp, est_l2):
            lines.append(
                f"{family},{_fmt(est.lam)},{est.mode_count},{_fmt(est.region_measure)},"
                f"{est.method},{_fmt(est.constant)}"
            )
        lp_estimates.append(est_lp)

    for lam in cfg.lambda_sweep:
        cut_d = make_cutoff(basis_d, lam)
        cut_n = make_cutoff(basis_n, lam)
        cut_x = make_cutoff(ext, lam)
        est_d = est_n = None
        if cut_d.count:
            est_d = estimate_constant_lp(basis_d, cut_d, region, max_workers=threads)
            record("dirichlet", est_d, estimate_constant_l2(basis_d, cut_d, region))
        if cut_n.count:
            est_n = estimate_constant_lp(basis_n, cut_n, region, max_workers=threads)
            record("neumann", est_n, estimate_constant_l2(basis_n, cut_n, region))
        if cut_x.count:
            est_s = simultaneous_constant(
                dd, basis_d, basis_n, lam, region,
                max_workers=threads, wall_estimates=(est_d, est_n),
            )
            record("simultaneous", est_s, estimate_constant_l2(ext, cut_x, lifted))

    rows = ["family,lambda,mode_count,region_measure,method,constant"]
    fits: dict[str, Any] = {}
    any_finite = False
    for family, (lines, lp_estimates) in per_family.items():
        rows.extend(lines)
        any_finite |= any(np.isfinite(e.constant) for e in lp_estimates)
        finite = [e for e in lp_estimates if np.isfinite(e.constant)]
        if len(finite) >= 3:
            fit = fit_exponential(finite)
            fits[family] = {"logC": fit.logC, "slope": fit.slope, "residual": fit.residual}
        else:
            fits[family] = None
    _write_text(os.path.join(outdir, "constants.csv"), "\n".join(rows) + "\n")
    _write_json(os.path.join(outdir, "fit.json"), {"fits": fits, "config": _resolved(cfg)})
    return EXIT_OK if any_finite else EXIT_INFEASIBLE


def cmd_control(cfg: ExperimentConfig, outdir: str) -> int:
    grid, coeffs = build_problem(cfg)
    if cfg.region is None:
        raise ConfigError("control needs a region")
    region = parse_region_spec(cfg.region, grid)
    u0, v0 = _seeded_unit_pair(grid, cfg.seed)
    tol = cfg.tolerances.get(cfg.method)
    report = run_simultaneous(
        grid, coeffs, u0, v0, region, cfg.T,
        method=cfg.method, lambda0=cfg.lambda0, steps=cfg.steps, tolerance=tol,
    )

    sig = report.signal
    cells = np.flatnonzero(lift_region(build_double(grid, coeffs), region).mask)
    header = "t," + ",".join(f"cell_{int(c)}" for c in cells)
    lines = [header]
    for m in range(sig.values.shape[0]):
        lines.append(_fmt(sig.timegrid[m]) + "," + ",".join(_fmt(x) for x in sig.values[m]))
    lines.append(_fmt(sig.timegrid[-1]) + "," + ",".join(_fmt(0.0) for _ in cells))
    _write_text(os.path.join(outdir, "control.csv"), "\n".join(lines) + "\n")

    nlines = ["trajectory,t,l2,sup"]
    for name, traj in (
        ("dirichlet", report.trajectory_u),
        ("neumann", report.trajectory_v),
        ("double", report.trajectory_double),
    ):
        for t, l2, sup in zip(traj.times, traj.l2_norms, traj.sup_norms):
            nlines.append(f"{name},{_fmt(t)},{_fmt(l2)},{_fmt(sup)}")
    _write_text(os.path.join(outdir, "norms.csv"), "\n".join(nlines) + "\n")

    if sig.slice_ledger is not None:
        _write_json(os.path.join(outdir, "cost_ledger.json"), {"slices": list(sig.slice_ledger)})

    summary = {
        "final_u_l2": report.final_u_l2,
        "final_v_l2": report.final_v_l2,
        "control_cost": report.control_cost,
        "dirichlet_trace_residual": report.dirichlet_trace_residual,
        "neumann_flux_residual": report.neumann_flux_residual,
        "method": report.method,
        "initial_u_l2": report.initial_u_l2,
        "initial_v_l2": report.initial_v_l2,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "metadata": {
            "n": cfg.n,
            "T": cfg.T,
            "region": cfg.region,
            "method": cfg.method,
            "seed": cfg.seed,
        },
        "config": _resolved(cfg),
    }
    _write_json(os.path.join(outdir, "summary.json"), summary)
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def cmd_fatcantor(cfg: ExperimentConfig, outdir: str) -> int:
    grid, _ = build_problem(cfg)
    if cfg.cantor_measure is None or cfg.cantor_depth is None:
        raise ConfigError("fatcantor needs cantor_measure and cantor_depth")
    region = fat_cantor_region(grid, cfg.cantor_measure, cfg.cantor_depth, cfg.seed)
    path = os.path.join(outdir, "cantor_mask.txt")
    write_mask_file(path, region)
    print(f"wrote {path}: measure {_fmt(region.measure)} over {int(region.mask.sum())} cells")
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, outdir: str) -> int:
    grid, coeffs = build_problem(cfg)
    bc = BoundaryCondition.DIRICHLET if cfg.bc == "dirichlet" else BoundaryCondition.NEUMANN
    basis = eigendecompose(assemble_laplacian(grid, coeffs, bc))
    rng = np.random.default_rng(cfg.seed)
    u0 = rng.standard_normal(grid.n)
    u0 /= l2_norm(grid, u0)
    yhat = basis.vectors.T @ (grid.weights * u0)
    times = np.linspace(0.0, cfg.T, 65)
    lines = ["trajectory,t,l2,sup"]
    l2s = []
    for t in times:
        u = basis.vectors @ (np.exp(-basis.eigenvalues * t) * yhat)
        l2s.append(l2_norm(grid, u))
        lines.append(f"{cfg.bc},{_fmt(t)},{_fmt(l2s[-1])},{_fmt(sup_norm(u))}")
    _write_text(os.path.join(outdir, "norms.csv"), "\n".join(lines) + "\n")
    monotone = bool(np.all(np.diff(l2s) <= 1e-12))
    _write_json(
        os.path.join(outdir, "summary.json"),
        {
            "bc": cfg.bc,
            "initial_l2": l2s[0],
            "final_l2": l2s[-1],
            "dissipative": monotone,
            "config": _resolved(cfg),
        },
    )
    return EXIT_OK if monotone else EXIT_TOLERANCE


def main(argv: Sequence[str] | None = None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON config document")
    common.add_argument("--output-dir", default=None, help="override the config's output_dir")
    common.add_argument("--seed", type=int, default=None, help="override the config's seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for LP sweeps")
    parser = argparse.ArgumentParser(prog="simulheat", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("double-check", "specineq", "control", "fatcantor", "simulate"):
        sub.add_parser(verb, parents=[common])

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        outdir = cfg.output_dir
        os.makedirs(outdir, exist_ok=True)
        if args.verb == "double-check":
            return cmd_double_check(cfg, outdir)
        if args.verb == "specineq":
            return cmd_specineq(cfg, outdir, max(1, args.threads))
        if args.verb == "control":
            return cmd_control(cfg, outdir)
        if args.verb == "fatcantor":
            return cmd_fatcantor(cfg, outdir)
        return cmd_simulate(cfg, outdir)
    except (ConfigError, EmptyRegionError, ResolutionError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularGramianError, InfeasibleControlError, NumericalError) as exc:
        print(f"numerical infeasibility: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
