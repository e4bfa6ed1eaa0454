"""Command-line entry points: calibrate | constants | verify | decompose | solve.

Every command reads a strict JSON config, writes reports atomically into the
output directory, and records a manifest sufficient to reproduce the run.
Wall-clock times go to a separate timings file so reports stay byte-stable
across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bubbles import DiscretizationError, calibrate
from .checks import all_passed, run_verify
from .configio import ConfigError, RunConfig, build_problem, load_config, parse_config
from .decompose import extract_profiles
from .functionals import alpha_root, c0_constant, check_smallness, r1_radius
from .grid import Field, GridSpec, load_field, save_field
from .solver import (
    BoxTooSmallError,
    DescentConfig,
    NoDescentError,
    StalledPathError,
    estimate_c1,
    find_first_solution,
    mountain_pass,
    select_t0,
    verify_solution,
)
from .spectral import FracParams


def _atomic_write_text(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, obj):
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, rows):
    lines = ["iteration,phase,energy,dual_grad_norm,max_node_index"]
    for it, phase, energy, dn, idx in rows:
        lines.append(f"{it},{phase},{energy!r},{dn!r},{idx}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _manifest(cfg: RunConfig, outputs: dict, extra: dict | None = None) -> dict:
    man = {
        "code_version": __version__,
        "config": cfg.raw,
        "seed": cfg.seed,
        "outputs": outputs,
    }
    if extra:
        man.update(extra)
    return man


def _finish(outdir: str, cfg: RunConfig, outputs: dict, t_start: float, extra: dict | None = None):
    _write_json(os.path.join(outdir, "manifest.json"), _manifest(cfg, outputs, extra))
    _write_json(os.path.join(outdir, "timings.json"), {"wall_time_s": time.time() - t_start})


def cmd_calibrate(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    cal = calibrate(cfg.grid, cfg.params,
                    residual_limit=float(cfg.calibration["residual_limit"]))
    out = {
        "beta": cal.beta,
        "S_num": cal.s_num,
        "residual": cal.residual,
        "residual_full": cal.residual_full,
        "kappa": cal.kappa,
        "energy_identity_error": cal.energy_identity_error,
        "hs_norm2_W": cal.hs_w,
        "energy_ref": cal.energy_ref,
    }
    _write_json(os.path.join(outdir, "calib.json"), out)
    _finish(outdir, cfg, {"calib": "calib.json"}, t0)
    return 0


def cmd_constants(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    d, cal = build_problem(cfg)
    p = cfg.params
    out = {
        "C0": c0_constant(d),
        "alpha": alpha_root(p),
        "r1": r1_radius(d, cal.s_num),
        "S_num": cal.s_num,
        "check_smallness": check_smallness(d, cal.s_num),
        "sup_a": d.a_sup,
        "two_star": p.two_star,
    }
    _write_json(os.path.join(outdir, "constants.json"), out)
    _finish(outdir, cfg, {"constants": "constants.json"}, t0)
    return 0


def cmd_verify(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    results = run_verify(cfg)
    out = {
        "checks": [r.to_dict() for r in results],
        "all_passed": all_passed(results),
    }
    _write_json(os.path.join(outdir, "verify.json"), out)
    _finish(outdir, cfg, {"verify": "verify.json"}, t0)
    for r in results:
        marker = "PASS" if r.passed else ("INFO" if r.informational else "FAIL")
        print(f"{marker} {r.name}: value={r.value:.6g} tol={r.tol:.6g}")
    return 0 if out["all_passed"] else 1


def cmd_decompose(cfg: RunConfig, outdir: str, field_path: str) -> int:
    t0 = time.time()
    d, _ = build_problem(cfg)
    v, _s = load_field(field_path)
    if v.grid != cfg.grid:
        raise ConfigError("input field grid does not match config grid")
    res = extract_profiles(
        v, d,
        stop_threshold=None,
        max_bubbles=int(cfg.decompose["max_bubbles"]),
        fit_tol=float(cfg.decompose["fit_tol"]),
    )
    _write_json(os.path.join(outdir, "decomp.json"), res.to_dict())
    save_field(os.path.join(outdir, "remainder.bin"), res.remainder, cfg.s,
               {"role": "decomposition-remainder"})
    _finish(outdir, cfg, {"decomp": "decomp.json", "remainder": "remainder.bin"}, t0)
    return 0


def cmd_solve(cfg: RunConfig, outdir: str) -> int:
    t0 = time.time()
    d, cal = build_problem(cfg)
    if not d.hypothesis_a_ok():
        raise ConfigError("coefficient violates hypothesis (A): a >= 1 decaying to 1")
    p = cfg.params
    sol_cfg = DescentConfig(
        tol_g=float(cfg.solver["tol_g"]),
        max_iter=int(cfg.solver["max_iter"]),
        ball_projection=bool(cfg.solver["ball_projection"]),
    )
    first = find_first_solution(d, sol_cfg, cal.s_num)
    t_sel = select_t0(d, first.u0, cal)
    mp = mountain_pass(
        d, first.u0, t_sel.t0,
        n_nodes=int(cfg.solver["path_nodes"]),
        tol_mp=float(cfg.solver["tol_mp"]),
        max_sweeps=int(cfg.solver["max_sweeps"]),
        switch_tol=float(cfg.solver["switch_tol"]),
        step_cap=float(cfg.solver["step_cap"]),
        s_num=cal.s_num,
        cal=cal,
    )
    c1 = estimate_c1(d, n_starts=int(cfg.solver["c1_starts"]), seed=cfg.seed,
                     extra_seeds=[mp.v0.values], cal=cal)

    report_checks = dict(mp.checks)
    report_checks["c0_negative"] = bool(first.c0 < 0)
    report_checks["first_solution_residual_ok"] = bool(first.residual < sol_cfg.tol_g * 1.5)
    report_checks["ordering_c0_below_c1"] = bool(first.c0 < c1["c1_estimate"])
    report_checks["ordering_c1_below_gamma"] = bool(
        c1["c1_estimate"] <= mp.gamma + 1e-12
    )
    small = check_smallness(d, cal.s_num)
    report_checks["smallness_ok"] = bool(small["ok"])
    primary = [
        "c0_negative", "first_solution_residual_ok", "gamma_above_c0",
        "gamma_below_window", "distinct", "positivity_ok", "ps_window_ok",
        "path_crosses_separatrix", "smallness_ok", "claim4_gate_ok",
    ]
    report_checks["all_primary_green"] = bool(all(report_checks[k] for k in primary))

    verify_u0 = verify_solution(d, first.u0)
    verify_v0 = verify_solution(d, mp.v0)

    report = {
        "c0": first.c0,
        "gamma": mp.gamma,
        "c1_estimate": c1["c1_estimate"],
        "c1_running_min": c1["running_min"],
        "residual_u0": first.residual,
        "residual_v0": mp.residual,
        "iterations_u0": first.iterations,
        "sweeps": mp.sweeps,
        "climb_iterations": mp.climb_iterations,
        "checks": report_checks,
        "verify_u0": verify_u0,
        "verify_v0": verify_v0,
        "constants": {
            "S_num": cal.s_num,
            "C0": c0_constant(d),
            "alpha": alpha_root(p),
            "r1": r1_radius(d, cal.s_num),
            "t0": t_sel.t0,
            "smallness": small,
        },
        "t0_ladder": t_sel.ladder,
    }
    _write_json(os.path.join(outdir, "report.json"), report)
    save_field(os.path.join(outdir, "u0.bin"), first.u0, cfg.s, {"role": "first-solution"})
    save_field(os.path.join(outdir, "v0.bin"), mp.v0, cfg.s, {"role": "second-solution"})
    _write_csv(os.path.join(outdir, "iterations.csv"), first.history + mp.history)

    outputs = {"report": "report.json", "u0": "u0.bin", "v0": "v0.bin",
               "iterations": "iterations.csv"}
    if bool(cfg.solver["bubbling_diagnostic"]):
        deviation = Field(cfg.grid, mp.v0.values - first.u0.values)
        decomp = extract_profiles(deviation, d,
                                  max_bubbles=int(cfg.decompose["max_bubbles"]),
                                  fit_tol=float(cfg.decompose["fit_tol"]))
        _write_json(os.path.join(outdir, "bubbling.json"), decomp.to_dict())
        outputs["bubbling"] = "bubbling.json"
    _finish(outdir, cfg, outputs, t0)
    return 0


def _grid_from_flag(text: str, dimension: int) -> dict:
    try:
        m, half = text.split(",")
        return {"dimension": dimension, "points_per_axis": int(m), "half_length": float(half)}
    except Exception as exc:
        raise ConfigError("--grid expects M,L") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracrit",
                                 description="critical fractional-equation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="path to the JSON run config")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="recorded thread budget (FFT backend is serial)")

    sp = sub.add_parser("calibrate", help="bubble amplitude calibration")
    common(sp)
    sp.add_argument("--n", type=int, default=None, help="dimension (flag-style usage)")
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--grid", default=None, help="M,L")

    for name in ("constants", "verify", "solve"):
        common(sub.add_parser(name))

    sp = sub.add_parser("decompose", help="profile extraction of a stored field")
    common(sp)
    sp.add_argument("--in", dest="field", required=True, help="binary field snapshot")
    return ap


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "calibrate" and args.n and args.s and args.grid:
        data = {
            "grid": _grid_from_flag(args.grid, args.n),
            "s": args.s,
            "coefficient": {"kind": "constant", "value": 1.0},
            "forcing": {"kind": "gaussian", "center": [0.0] * args.n, "width": 1.0,
                        "dual_norm": 0.0},
        }
        cfg = parse_config(data)
    else:
        raise ConfigError("--config is required (calibrate also accepts --n/--s/--grid)")
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = args.seed
        cfg = parse_config(raw)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "calibrate":
            return cmd_calibrate(cfg, args.out)
        if args.command == "constants":
            return cmd_constants(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.out)
        if args.command == "decompose":
            return cmd_decompose(cfg, args.out, args.field)
        if args.command == "solve":
            return cmd_solve(cfg, args.out)
        raise ConfigError(f"unknown command {args.command}")
    except NoDescentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DiscretizationError, BoxTooSmallError, StalledPathError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
