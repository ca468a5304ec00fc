"""Batch entry point: configuration, dispatch, persistence, and plot emission.

Subcommands: profile, interp, cell, gamma, norms, check-well.  Flags override
config-file values; the effective configuration is echoed into the output
directory.  Exit codes: 0 success, 1 diagnostic failure (unbounded energy,
nonmonotone tables, failed hypothesis scans), 2 usage errors, 3 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, potential
from .cache import ResultCache, config_hash
from .cell2d import angle_to_normal, anisotropy_scan, estimate_g, positivity_check
from .discretize import FunctionalSpec, save_field_binary, save_field_csv
from .errors import DiagnosticFailure, UsageError
from .gamma import GTable, InterfaceSpec, run_gamma_1d, run_gamma_2d
from .interpolation import (
    adversarial_threshold,
    adversarial_threshold_scaled,
    check_unit_interval,
    combined_threshold,
    eps0_proxy,
    scaled_margin,
    _fourier_candidates,
    _spline_candidates,
)
from .discretize import Field1D, Grid1D
from .profile1d import estimate_m, tail_diagnostics
from .report import RunMeta, render_field2d, render_gamma_curves, render_m_table, render_polar_density, render_profile, render_well, write_csv, write_json
from .tensors import equivalence_constants, parse_norm_token

_COMMON_DEFAULTS = {
    "k": 2,
    "q": "",
    "well": "quartic",
    "norm": "frobenius",
    "seed": 0,
    "out": "runs",
    "cache": "reuse",
    "threads": 0,  # 0 = available parallelism
    "plots": True,
}

_DEFAULTS = {
    "profile": {**_COMMON_DEFAULTS, "T": "2,4,8", "tol": 1e-4, "ppu": 200, "band": 0.0},
    "interp": {**_COMMON_DEFAULTS, "ell": 1, "budget": 400, "family": "all", "q_frac": 0.9, "suite": 200, "adversarial": True},
    "cell": {**_COMMON_DEFAULTS, "norm": "operatorial", "eps": "0.2,0.1,0.05", "nu": "90deg", "angles": "", "band": 0.1, "resolution": 6.0, "tol": 0.02},
    "gamma": {**_COMMON_DEFAULTS, "dim": 1, "eps": "0.2,0.1,0.05", "nu": "90deg", "domain": "-1,1", "g_table": "", "m_hat": float("nan"), "resolution": 6.0},
    "norms": {**_COMMON_DEFAULTS, "norm_a": "maxcomp", "norm_b": "frobenius", "d": 2, "ell": 2, "budget": 2000},
    "check-well": {**_COMMON_DEFAULTS, "step": 0.01},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseflow", description="phase-transition energy experiments")
    parser.add_argument("--version", action="version", version=f"phaseflow {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--k", type=int, help="highest derivative order (1..4)")
        p.add_argument("--q", type=str, help="comma list of q_1..q_{k-1} (highest is always 1)")
        p.add_argument("--well", type=str, help="quartic or table:<csv>")
        p.add_argument("--norm", type=str, help="operatorial|frobenius|maxcomp|wfrob:<csv>")
        p.add_argument("--seed", type=int, help="run seed (recorded in every output)")
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument("--cache", choices=["reuse", "recompute"], help="result cache policy")
        p.add_argument("--threads", type=int, help="task pool size (0 = all cores)")
        p.add_argument("--config", type=str, help="JSON config file (flat keys; flags override)")
        p.add_argument("--plots", dest="plots", action="store_true", default=None, help="render figures (default)")
        p.add_argument("--no-plots", dest="plots", action="store_false", default=None)

    p = sub.add_parser("profile", help="optimal-profile constants m(T)")
    add_common(p)
    p.add_argument("--T", type=str, help="increasing half-length schedule, e.g. 2,4,8")
    p.add_argument("--tol", type=float, help="|m(T_last)-m(T_prev)| convergence tolerance")
    p.add_argument("--ppu", type=int, help="grid nodes per unit length")
    p.add_argument("--band", type=float, help="clamped well band width (0 = automatic)")

    p = sub.add_parser("interp", help="interpolation inequality thresholds and checks")
    add_common(p)
    p.add_argument("--ell", type=int, help="intermediate order (1..k-1)")
    p.add_argument("--budget", type=int, help="adversarial candidates per family")
    p.add_argument("--family", choices=["all", "fourier", "spline", "solverdescent"], help="candidate family")
    p.add_argument("--q-frac", dest="q_frac", type=float, help="verification coefficient as a fraction of q_hat")
    p.add_argument("--suite", type=int, help="verification suite size")
    p.add_argument("--adversarial", dest="adversarial", action="store_true", default=None, help="estimate the threshold (default)")

    p = sub.add_parser("cell", help="anisotropic density on rotated unit cells")
    add_common(p)
    p.add_argument("--eps", type=str, help="decreasing eps schedule, e.g. 0.2,0.1,0.05")
    p.add_argument("--nu", type=str, help="normal: '90deg' or 'x,y'")
    p.add_argument("--angles", type=str, help="scan: count (e.g. 8) or comma list in degrees")
    p.add_argument("--band", type=float, help="pinned boundary band width")
    p.add_argument("--resolution", type=float, help="grid points per eps (h = eps/resolution)")
    p.add_argument("--tol", type=float, help="continuation convergence tolerance")

    p = sub.add_parser("gamma", help="sharp-interface convergence experiments")
    add_common(p)
    p.add_argument("--dim", type=int, choices=[1, 2], help="experiment dimension")
    p.add_argument("--eps", type=str, help="decreasing eps schedule")
    p.add_argument("--nu", type=str, help="2D interface normal")
    p.add_argument("--domain", type=str, help="1D domain 'a,b'")
    p.add_argument("--g-table", dest="g_table", type=str, help="2D: polar density CSV from a cell scan")
    p.add_argument("--m-hat", dest="m_hat", type=float, help="1D: profile constant (computed when omitted)")
    p.add_argument("--resolution", type=float, help="grid points per eps")

    p = sub.add_parser("norms", help="tensor norm utilities (equivalence constants)")
    add_common(p)
    p.add_argument("--norm-a", dest="norm_a", type=str, help="numerator norm token")
    p.add_argument("--norm-b", dest="norm_b", type=str, help="denominator norm token")
    p.add_argument("--d", type=int, help="tensor dimension")
    p.add_argument("--ell", type=int, help="tensor order")
    p.add_argument("--budget", type=int, help="random tensors sampled")

    p = sub.add_parser("check-well", help="hypothesis scan of a double-well potential")
    add_common(p)
    p.add_argument("--step", type=float, help="scan spacing on [-3, 3]")

    return parser


def parse_config(argv, parser: argparse.ArgumentParser | None = None) -> dict:
    """Merge CLI flags over an optional JSON config file; unknown keys are rejected."""
    parser = parser or _build_parser()
    ns = parser.parse_args(argv)
    sub = ns.subcommand
    defaults = dict(_DEFAULTS[sub])
    merged = dict(defaults)

    if getattr(ns, "config", None):
        path = Path(ns.config)
        try:
            file_cfg = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {path}: {exc}") from exc
        unknown = set(file_cfg) - set(defaults) - {"subcommand"}
        if unknown:
            raise UsageError(f"unknown config keys for '{sub}': {sorted(unknown)}")
        if file_cfg.get("subcommand", sub) != sub:
            raise UsageError("config file subcommand does not match the invocation")
        merged.update({k: v for k, v in file_cfg.items() if k != "subcommand"})

    for key in defaults:
        flag_val = getattr(ns, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    merged["subcommand"] = sub

    threads = int(os.environ.get("PHASEFLOW_THREADS", merged["threads"]))
    merged["threads"] = threads
    _validate_config(merged)
    return merged


def _parse_floats(text: str, name: str):
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from exc
    return values


def _parse_normal(text: str):
    text = str(text).strip()
    if text.endswith("deg"):
        angle = math.radians(float(text[:-3]))
        return angle_to_normal(angle)
    parts = _parse_floats(text, "nu")
    if len(parts) != 2:
        raise UsageError(f"--nu: expected 'NNdeg' or 'x,y', got {text!r}")
    norm = math.hypot(*parts)
    if norm == 0:
        raise UsageError("--nu: zero vector")
    return (parts[0] / norm, parts[1] / norm)


def _well_from_token(token: str):
    if token == "quartic":
        return potential.quartic()
    if token.startswith("table:"):
        return potential.from_csv(token.split(":", 1)[1])
    raise UsageError(f"unknown well token {token!r}")


def _spec_from_config(cfg: dict, eps: float = 1.0) -> FunctionalSpec:
    k = int(cfg["k"])
    if k < 1:
        raise UsageError("k must be at least 1")
    q_lower = _parse_floats(cfg["q"], "q") if cfg["q"] else [0.0] * (k - 1)
    if len(q_lower) != k - 1:
        raise UsageError(f"--q needs exactly {k - 1} values for k={k}")
    return FunctionalSpec.make(k, q_lower=q_lower, norm=str(cfg["norm"]), eps=eps, well=_well_from_token(str(cfg["well"])))


def _validate_config(cfg: dict) -> None:
    if int(cfg["k"]) < 1 or int(cfg["k"]) > 4:
        raise UsageError("k must lie in 1..4")
    for key in ("T", "eps"):
        if key in cfg and cfg[key]:
            vals = _parse_floats(cfg[key], key)
            diffs = np.diff(vals)
            if key == "T" and np.any(diffs <= 0):
                raise UsageError("--T schedule must be strictly increasing")
            if key == "eps" and np.any(diffs >= 0):
                raise UsageError("--eps schedule must be strictly decreasing")


def _pool(cfg):
    n = int(cfg["threads"])
    if n <= 0:
        n = os.cpu_count() or 1
    if n == 1:
        return None
    return ThreadPoolExecutor(max_workers=n)


def _outputs_root(cfg) -> Path:
    root = Path(cfg["out"])
    root.mkdir(parents=True, exist_ok=True)
    return root


# ---------------------------------------------------------------------------
# subcommand runners (each returns (exit_code, list of produced file names))


def _run_profile(cfg, out: Path, meta: RunMeta, pool):
    spec = _spec_from_config(cfg, eps=1.0)
    schedule = _parse_floats(cfg["T"], "T")
    band = float(cfg["band"]) or None
    est = estimate_m(spec, schedule, tol=float(cfg["tol"]), ppu=int(cfg["ppu"]), bc_band=band, pool=pool)

    files = []
    write_csv(out / "m_table.csv", ["T", "m"], est.table, meta)
    files.append("m_table.csv")
    summary = {
        "m_hat": est.m_hat,
        "converged": est.converged,
        "monotone_ok": est.monotone_ok,
        "unbounded": est.unbounded,
        "message": est.message,
        "k": spec.k,
        "q": list(spec.q),
        "table": [list(row) for row in est.table],
    }
    if est.last_solution is not None and not est.unbounded:
        sol = est.last_solution
        summary["tail_derivatives"] = {str(ell): val for ell, val in tail_diagnostics(sol).items()}
        summary["grad_norm"] = sol.grad_norm
        summary["iterations"] = sol.iterations
        summary["multistart_spread"] = sol.multistart_spread
        save_field_csv(sol.field, out / "profile.csv", meta.stamp)
        save_field_binary(sol.field, out / "profile.phf")
        files += ["profile.csv", "profile.phf"]
        if cfg["plots"]:
            render_profile(out / "profile.png", sol.field)
            render_m_table(out / "m_table.png", est.table)
            files += ["profile.png", "m_table.png"]
    write_json(out / "profile_summary.json", summary, meta)
    files.append("profile_summary.json")
    code = 0 if (est.monotone_ok and not est.unbounded) else 1
    return code, files


def _run_interp(cfg, out: Path, meta: RunMeta, pool):
    spec = _spec_from_config(cfg, eps=1.0)
    k = spec.k
    ell = int(cfg["ell"])
    if not 1 <= ell <= k - 1:
        raise UsageError(f"--ell must lie in 1..k-1={k - 1}")
    budget = int(cfg["budget"])
    seed = int(cfg["seed"])
    well = spec.well

    files = []
    if str(cfg["family"]) == "all":
        combined = combined_threshold(ell, k, well, budget=budget, seed=seed)
        q_hat = combined.q_hat
        per_family = {fam: est.q_hat for fam, est in combined.per_family.items()}
        witness = combined.per_family[min(per_family, key=per_family.get)]
        agreement = combined.agreement_factor
    else:
        est = adversarial_threshold(ell, k, well, family=str(cfg["family"]), budget=budget, seed=seed)
        q_hat, per_family, witness, agreement = est.q_hat, {est.family: est.q_hat}, est, 1.0

    write_csv(out / "maximizer.csv", ["t", "u"], list(zip(witness.maximizer_t, witness.maximizer_u)), meta)
    files.append("maximizer.csv")

    # Verification suite at a safety margin below the estimated threshold.
    q_test = float(cfg["q_frac"]) * q_hat
    n_suite = int(cfg["suite"])
    cands = _fourier_candidates(ell, k, n_suite // 2, seed + 101, 2048) + _spline_candidates(ell, k, n_suite - n_suite // 2, seed + 202, 2048)
    rows = []
    violations = 0
    for cand in cands:
        grid = Grid1D(0.0, 1.0, cand.t.size - 2)
        field = Field1D(grid, np.interp(grid.nodes, cand.t, cand.u), np.zeros(grid.num_nodes, bool))
        rep = check_unit_interval(field, ell, k, well, q_test)
        rows.append([rep.ell, rep.k, rep.q, rep.lhs, rep.rhs, rep.ratio, rep.passed])
        violations += 0 if rep.passed else 1
    write_csv(out / "checks.csv", ["ell", "k", "q", "lhs", "rhs", "ratio", "pass"], rows, meta)
    files.append("checks.csv")

    scaled = adversarial_threshold_scaled(ell, k, well, budget=budget, seed=seed)
    q_proof_chain = q_hat / scaled_margin(ell, k)
    summary = {
        "ell": ell,
        "k": k,
        "q_hat": q_hat,
        "per_family": per_family,
        "agreement_factor": agreement,
        "q_hat_scaled": scaled.q_hat,
        "q_scaled_proof_chain": q_proof_chain,
        "eps0_proxy": eps0_proxy(ell, k, well, q_proof_chain, seed=seed),
        "q_test": q_test,
        "suite_size": len(rows),
        "violations": violations,
        "maximizer_label": witness.maximizer_label,
        "note": "q_hat bounds the admissible range from above; desk-scale search cannot certify distance to the true threshold",
    }
    write_json(out / "threshold.json", summary, meta)
    files.append("threshold.json")
    return (0 if violations == 0 else 1), files


def _run_cell(cfg, out: Path, meta: RunMeta, pool):
    spec = _spec_from_config(cfg, eps=1.0)
    schedule = _parse_floats(cfg["eps"], "eps")
    band = float(cfg["band"])
    resolution = float(cfg["resolution"])
    tol = float(cfg["tol"])
    files = []

    if cfg["angles"]:
        token = str(cfg["angles"])
        if "," in token:
            angles = [math.radians(float(a)) for a in token.split(",") if a.strip()]
        else:
            count = int(token)
            angles = list(np.linspace(0.0, math.pi, count, endpoint=False))
        scan = anisotropy_scan(spec, angles, schedule, tol=tol, r_band=band, resolution=resolution, pool=pool)
        write_csv(out / "angle_eps_g.csv", ["angle", "epsilon", "g"], scan.rows(), meta)
        write_csv(out / "polar_g.csv", ["angle", "g_final"], list(zip(scan.angles, scan.g_values())), meta)
        files += ["angle_eps_g.csv", "polar_g.csv"]
        positivity = positivity_check(scan)
        summary = {
            "angles": list(scan.angles),
            "g": scan.g_values(),
            "positivity_pass": positivity.passed,
            "min_g": positivity.min_g,
            "unbounded_angles": [est.angle for est in scan.estimates if est.unbounded],
        }
        write_json(out / "cell_summary.json", summary, meta)
        files.append("cell_summary.json")
        if cfg["plots"]:
            render_polar_density(out / "polar_g.png", scan.angles, scan.g_values())
            files.append("polar_g.png")
        ok = positivity.passed and not summary["unbounded_angles"]
        return (0 if ok else 1), files

    nu = _parse_normal(str(cfg["nu"]))
    est = estimate_g(spec, nu, schedule, tol=tol, r_band=band, resolution=resolution, pool=pool)
    rows = [(est.angle, eps, g) for eps, g in est.table]
    write_csv(out / "angle_eps_g.csv", ["angle", "epsilon", "g"], rows, meta)
    files.append("angle_eps_g.csv")
    summary = {
        "nu": list(est.nu),
        "angle": est.angle,
        "g_hat": est.g_hat,
        "converged": est.converged,
        "unbounded": est.unbounded,
        "table": [list(r) for r in est.table],
    }
    if est.last_result is not None:
        summary["cell_result"] = est.last_result.as_dict()
        save_field_csv(est.last_result.field, out / "cell_solution.csv", meta.stamp)
        save_field_binary(est.last_result.field, out / "cell_solution.phf")
        files += ["cell_solution.csv", "cell_solution.phf"]
        if cfg["plots"]:
            render_field2d(out / "cell_solution.png", est.last_result.field)
            files.append("cell_solution.png")
    write_json(out / "cell_summary.json", summary, meta)
    files.append("cell_summary.json")
    return (0 if not est.unbounded else 1), files


def _run_gamma(cfg, out: Path, meta: RunMeta, pool):
    spec = _spec_from_config(cfg, eps=1.0)
    schedule = _parse_floats(cfg["eps"], "eps")
    files = []
    if int(cfg["dim"]) == 1:
        domain = _parse_floats(cfg["domain"], "domain")
        if len(domain) != 2:
            raise UsageError("--domain expects 'a,b'")
        m_hat = float(cfg["m_hat"])
        report = run_gamma_1d(spec, schedule, domain=tuple(domain), m_hat=(None if math.isnan(m_hat) else m_hat), resolution=float(cfg["resolution"]), pool=pool)
    else:
        table_path = str(cfg["g_table"])
        if not table_path:
            candidate = out / "polar_g.csv"
            if candidate.exists():
                table_path = str(candidate)
            else:
                print("gamma: g table missing (run `cell --angles ...` first or pass --g-table)", file=sys.stderr)
                return 1, files
        angles, values = _load_polar_csv(table_path)
        gtable = GTable(tuple(angles), tuple(values))
        nu = _parse_normal(str(cfg["nu"]))
        iface = InterfaceSpec.flat_2d(nu)
        g_hat = gtable.lookup(nu)
        report = run_gamma_2d(spec, iface, schedule, g_hat=g_hat, resolution=float(cfg["resolution"]), pool=pool)

    write_csv(out / "gamma_curve.csv", ["epsilon", "energy", "recovery_energy", "l2dist", "transitions"], report.rows(), meta)
    files.append("gamma_curve.csv")
    summary = {
        "predicted": report.predicted,
        "unbounded": report.unbounded,
        "energies": list(report.energies),
        "recovery_energies": list(report.recovery_energies),
        "l2_dists": list(report.l2_dists),
        "transitions": list(report.transitions),
        "jump_error_cells": report.jump_error_cells,
    }
    write_json(out / "gamma_summary.json", summary, meta)
    files.append("gamma_summary.json")
    if cfg["plots"] and report.eps_table:
        render_gamma_curves(out / "gamma_curve.png", report)
        files.append("gamma_curve.png")
    return (0 if not report.unbounded else 1), files


def _load_polar_csv(path):
    import csv as _csv

    angles, values = [], []
    with open(path, newline="") as fh:
        reader = _csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["angle", "g_final"]:
            raise UsageError(f"{path}: expected header 'angle,g_final'")
        for row in reader:
            if row:
                angles.append(float(row[0]))
                values.append(float(row[1]))
    return angles, values


def _run_norms(cfg, out: Path, meta: RunMeta, pool):
    a = parse_norm_token(str(cfg["norm_a"]))
    b = parse_norm_token(str(cfg["norm_b"]))
    lo, hi = equivalence_constants(a, b, int(cfg["d"]), int(cfg["ell"]), budget=int(cfg["budget"]), seed=int(cfg["seed"]))
    write_json(out / "norms.json", {"norm_a": str(cfg["norm_a"]), "norm_b": str(cfg["norm_b"]), "d": int(cfg["d"]), "ell": int(cfg["ell"]), "c_low": lo, "c_high": hi}, meta)
    return 0, ["norms.json"]


def _run_check_well(cfg, out: Path, meta: RunMeta, pool):
    well = _well_from_token(str(cfg["well"]))
    grid = potential.default_scan_grid(float(cfg["step"]))
    report = potential.check_hypotheses(well, grid)
    write_json(out / "well_report.json", report.as_dict(), meta)
    files = ["well_report.json"]
    if cfg["plots"]:
        render_well(out / "well.png", well)
        files.append("well.png")
    return (0 if report.all_passed else 1), files


_RUNNERS = {
    "profile": _run_profile,
    "interp": _run_interp,
    "cell": _run_cell,
    "gamma": _run_gamma,
    "norms": _run_norms,
    "check-well": _run_check_well,
}


def run(cfg: dict) -> int:
    """Dispatch a parsed configuration; see module docstring for exit codes."""
    out = _outputs_root(cfg)
    key = config_hash(cfg)
    meta = RunMeta(seed=int(cfg["seed"]), config_hash=key[:12])
    write_json(out / "config.echo.json", {"config": {k: cfg[k] for k in sorted(cfg)}}, meta)

    cache = ResultCache(out, mode=str(cfg["cache"]))
    manifest = cache.entry(key) / "exit_code"
    if cache.replay(key) and manifest.exists():
        return int(manifest.read_text())

    np.random.seed(int(cfg["seed"]))  # belt and braces; all internal RNGs are explicit
    pool = _pool(cfg)
    try:
        code, files = _RUNNERS[cfg["subcommand"]](cfg, out, meta, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    cache.store(key, files)
    cache.entry(key).mkdir(parents=True, exist_ok=True)
    (cache.entry(key) / "exit_code").write_text(str(code))
    return code


def main(argv=None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        code = run(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    except DiagnosticFailure as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        sys.exit(1)
    except OSError as exc:
        print(f"i/o error: {exc} (path: {getattr(exc, 'filename', '?')})", file=sys.stderr)
        sys.exit(3)
    sys.exit(code)


if __name__ == "__main__":
    main()
