"""Command-line front end: run scenarios, verify optimality, compare controllers.

Exit codes are a stable contract: 0 success, 2 validation failure (bad case
file or flag), 3 numeric blow-up, 4 a named verification check failed.
Output artifacts (CSV, metrics JSON, SVG) are byte-deterministic for
identical invocations; wall times appear only on stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from .controller import DppdConfig
from .diagnostics import (
    PrimalDualPoint,
    chatter_metric,
    kkt_residual,
    lemma2_check,
    lyapunov_va,
    lyapunov_vb,
    rate_report,
    vb_state_from_trajectory,
)
from .errors import (
    GridFreqError,
    NonFiniteStateError,
    NonpositiveParameterError,
    NotConvergedError,
)
from .scenarios import Scenario, load_case
from .simulate import Trajectory, run_closed_loop, run_pure_opt
from ._svg import write_svg_lines

KKT_TOL = 1e-5
VA_SLACK = 1e-8
VB_SLACK = 1e-7
LEMMA2_TOL = 1e-4
BOX_TOL = 1e-6


@dataclass
class RunReport:
    """Result summary of one CLI command."""

    case: str
    command: str
    config: dict
    wall_time: float
    trajectory_path: str | None
    metrics: dict
    flags: dict


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_trajectory_csv(path: Path, traj: Trajectory, net, scenario_name: str):
    """RFC-4180 CSV ('.' decimal, CRLF): t, omega, d, P, theta, mu, nu-, nu+, g.

    The theta columns hold the plant angle in closed loop and the virtual
    angle in pure-optimization mode (the only angle that mode carries).
    """
    n = net.n
    names_n = [str(i + 1) for i in range(n)]
    names_l = net.line_names()
    header = (["t"]
              + [f"omega_{s}" for s in names_n]
              + [f"d_{s}" for s in names_n]
              + [f"P_{s}" for s in names_l]
              + [f"theta_{s}" for s in names_n]
              + [f"mu_{s}" for s in names_n]
              + [f"nu_minus_{s}" for s in names_l]
              + [f"nu_plus_{s}" for s in names_l]
              + ["g"])
    theta_key = "theta" if "theta" in traj.data else "theta_hat"
    blocks = [traj.data["omega"], traj.data["d"], traj.data["P"],
              traj.data[theta_key], traj.data["mu"], traj.data["nu_minus"],
              traj.data["nu_plus"]]
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for k, tk in enumerate(traj.t):
            row = [_fmt(tk)]
            for blk in blocks:
                row.extend(_fmt(v) for v in blk[k])
            row.append(_fmt(traj.g[k]))
            fh.write(",".join(row) + "\r\n")


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _run_metrics(net, cost, scn: Scenario, traj: Trajectory) -> dict:
    pt = PrimalDualPoint.from_trajectory(traj)
    p_in_final = traj.data["p_in"][-1]
    res = kkt_residual(net, cost, p_in_final, pt,
                       thermal_limits=scn.controller.thermal_limits)
    rate = rate_report(traj) if traj.t[-1] > 1.0 else None
    chatter = {str(i + 1): chatter_metric(traj, i)
               for i in cost.controllable_indices()}
    return {
        "kkt_total": res.total,
        "kkt_breakdown": res.as_dict(),
        "rate_bound_t0": None if rate is None else rate.bound_t0,
        "rate_bound_final": None if rate is None else rate.bound_final,
        "chatter": chatter,
        "omega_final_inf": float(np.max(np.abs(traj.final("omega")))),
        "g_final": float(traj.g[-1]),
        "max_box_violation": traj.max_box_violation,
        "min_nu": traj.min_nu,
        "cost_scale_k": cost.k,
    }


def _scenario_with_overrides(scn: Scenario, args) -> tuple[Scenario, DppdConfig]:
    if args.scenario:
        scn = scn.with_preset(args.scenario)
    if args.T is not None:
        if args.T <= 0:
            raise NonpositiveParameterError("T must be positive")
        scn = dataclasses.replace(scn, horizon=args.T)
    if args.h is not None:
        if args.h <= 0:
            raise NonpositiveParameterError("h must be positive")
        scn = dataclasses.replace(scn, h=args.h)
    if args.k1 is not None:
        scn = dataclasses.replace(scn, k1=args.k1)
    if args.k2 is not None:
        scn = dataclasses.replace(scn, k2=args.k2)
    cfg = scn.controller
    if args.kappa is not None:
        cfg = dataclasses.replace(cfg, kappa=args.kappa)
    if args.mode is not None:
        cfg = dataclasses.replace(cfg, mode=args.mode)
    if args.thermal_limits is not None:
        cfg = dataclasses.replace(cfg, thermal_limits=args.thermal_limits)
    return dataclasses.replace(scn, controller=cfg), cfg


def _config_echo(scn: Scenario, cfg: DppdConfig, seed: int | None) -> dict:
    return {
        "mode": cfg.mode, "kappa": cfg.kappa,
        "thermal_limits": cfg.thermal_limits,
        "rho": {"eta": cfg.rho_eta, "d": cfg.rho_d,
                "theta_hat": cfg.rho_theta_hat, "P": cfg.rho_p,
                "lambda": cfg.rho_lam, "mu": cfg.rho_mu,
                "nu_minus": cfg.rho_nu_minus, "nu_plus": cfg.rho_nu_plus},
        "horizon": scn.horizon, "h": scn.h, "sample_every": scn.sample_every,
        "k1": scn.k1, "damping_side": scn.damping_side, "k2": scn.k2,
        "seed": seed,
    }


def _simulate(net, cost, scn: Scenario, cfg: DppdConfig,
              baseline: bool | None = None) -> Trajectory:
    if cfg.mode == "pure_opt":
        return run_pure_opt(net, cost, cfg, scn.profile(), scn.horizon,
                            scn.h, scn.sample_every)
    return run_closed_loop(net, cost, cfg, scn.profile(), scn.horizon,
                           scn.h, scn.sample_every, init=scn.init,
                           k1=scn.k1, damping_side=scn.damping_side,
                           k2=scn.k2, baseline=baseline, warmup=scn.warmup)


def _hz(traj: Trajectory, scn: Scenario) -> np.ndarray:
    if scn.omega_unit == "rad_s":
        return scn.nominal_hz + traj.data["omega"] / (2.0 * np.pi)
    return scn.nominal_hz * (1.0 + traj.data["omega"])


def cmd_run(args) -> tuple[RunReport, int]:
    net, cost, scn = load_case(args.case)
    scn, cfg = _scenario_with_overrides(scn, args)
    out = _outdir(args)
    t0 = time.perf_counter()
    traj = _simulate(net, cost, scn, cfg)
    wall = time.perf_counter() - t0

    tag = f"{Path(str(args.case)).stem}__{args.scenario or 'default'}"
    csv_path = out / f"{tag}.csv"
    write_trajectory_csv(csv_path, traj, net, tag)
    metrics = _run_metrics(net, cost, scn, traj)
    write_json(out / f"{tag}__metrics.json", metrics)
    if args.svg:
        write_svg_lines(out / f"{tag}__frequency.svg", traj.t, _hz(traj, scn),
                        title="frequency [Hz]")
        write_svg_lines(out / f"{tag}__d.svg", traj.t,
                        traj.data["d"][:, cost.controllable], title="d [p.u.]")
        write_svg_lines(out / f"{tag}__P.svg", traj.t, traj.data["P"],
                        title="line flow [p.u.]")

    report = RunReport(case=scn.name, command="run",
                       config=_config_echo(scn, cfg, args.seed),
                       wall_time=wall, trajectory_path=str(csv_path),
                       metrics=metrics, flags={})
    print(f"run {scn.name}: T={scn.horizon:g}s h={scn.h:g} mode={cfg.mode} "
          f"wall={wall:.2f}s")
    print(f"  final |omega|_inf = {metrics['omega_final_inf']:.3e}   "
          f"kkt_total = {metrics['kkt_total']:.3e}")
    print(f"  wrote {csv_path}")
    return report, 0


def _verify_case(case: str, h_override: float | None = None,
                 horizon_override: float | None = None,
                 kappa: float | None = None,
                 thermal_limits: bool | None = None) -> dict:
    """All named verification checks for one case; used by cmd_verify."""
    net, cost, scn = load_case(case)
    # DppdConfig defaults are exactly the analysis stepsizes (1 and 1/2)
    analysis = DppdConfig(
        kappa=0.5 if kappa is None else kappa, mode="pure_opt",
        thermal_limits=(scn.controller.thermal_limits
                        if thermal_limits is None else thermal_limits))
    vscn = scn.with_preset("verify") if (scn.presets and "verify" in scn.presets) else scn
    if horizon_override is not None:
        vscn = dataclasses.replace(vscn, horizon=horizon_override)
    if h_override is not None:
        vscn = dataclasses.replace(vscn, h=h_override)

    traj = run_pure_opt(net, cost, analysis, vscn.profile(), vscn.horizon,
                        vscn.h, vscn.sample_every)
    p_in_final = traj.data["p_in"][-1]
    pt = PrimalDualPoint.from_trajectory(traj)
    res = kkt_residual(net, cost, p_in_final, pt,
                       thermal_limits=analysis.thermal_limits)

    va = np.array([lyapunov_va(cost, traj.data["d"][i])
                   for i in range(traj.n_samples)])
    va_inc = float(np.max(np.diff(va))) if va.size > 1 else 0.0

    vb_violation = -np.inf
    vb_inc = 0.0
    vb_ok = True
    if res.total < KKT_TOL:
        eq = vb_state_from_trajectory(traj, -1)
        vb = np.array([
            lyapunov_vb(net, cost, p_in_final, vb_state_from_trajectory(traj, i),
                        eq, kappa=analysis.kappa,
                        thermal_limits=analysis.thermal_limits,
                        check_equilibrium=False)
            for i in range(traj.n_samples)])
        diffs = np.diff(vb)
        vb_inc = float(np.max(diffs)) if diffs.size else 0.0
        vb_violation = float(np.max(diffs - VB_SLACK * (1.0 + vb[:-1]))) if diffs.size else -np.inf
        vb_ok = vb_violation <= 0.0
    else:
        vb_ok = False

    rate = rate_report(traj)

    # the angle/flow equivalence needs a physical angle: paired closed-loop run
    clscn = scn.with_preset("verify_cl") if (scn.presets and "verify_cl" in scn.presets) else vscn
    cl = run_closed_loop(net, cost,
                         dataclasses.replace(scn.controller, mode="closed_loop"),
                         clscn.profile(), clscn.horizon, clscn.h,
                         clscn.sample_every, init=clscn.init)
    try:
        l2 = lemma2_check(net, cl.data["theta"][-1], cl.data["theta_hat"][-1],
                          cl.data["P"][-1], cl.data["omega"][-1],
                          g_final=float(cl.g[-1]))
        lemma2_ok = (l2.angle_residual < LEMMA2_TOL
                     and l2.flow_residual < LEMMA2_TOL
                     and l2.shift_residual < LEMMA2_TOL)
        l2_vals = {"lemma2_angle_residual": l2.angle_residual,
                   "lemma2_flow_residual": l2.flow_residual,
                   "lemma2_shift_residual": l2.shift_residual,
                   "lemma2_omega_inf": l2.omega_inf}
    except NotConvergedError:
        lemma2_ok = False
        l2_vals = {"lemma2_angle_residual": None, "lemma2_flow_residual": None,
                   "lemma2_shift_residual": None, "lemma2_omega_inf": None}

    flows_hat = (pt.theta_hat @ net.incidence) * net.susceptance
    tol = 1e-6
    active = [name for name, fl, lo, hi in zip(net.line_names(), flows_hat,
                                               net.p_min, net.p_max)
              if fl <= lo + tol or fl >= hi - tol]

    box_viol = max(traj.max_box_violation, cl.max_box_violation)
    checks = {
        "kkt": res.total < KKT_TOL,
        "va_monotone": va_inc <= VA_SLACK,
        "vb_monotone": vb_ok,
        "rate_bound": rate.passed,
        "lemma2": lemma2_ok,
        "box_invariance": box_viol < BOX_TOL,
    }
    metrics = {
        "kkt_total": res.total,
        "kkt_breakdown": res.as_dict(),
        "va_max_increase": va_inc,
        "vb_max_increase": vb_inc,
        "vb_slack_violation": None if vb_violation == -np.inf else vb_violation,
        "rate_bound_t0": rate.bound_t0,
        "rate_bound_final": rate.bound_final,
        "chatter": {str(i + 1): chatter_metric(traj, i)
                    for i in cost.controllable_indices()},
        "max_box_violation": box_viol,
        "min_nu": min(traj.min_nu, cl.min_nu),
        "active_line_limits": active,
        "g_final_pure_opt": float(traj.g[-1]),
        "g_final_closed_loop": float(cl.g[-1]),
        "cost_scale_k": cost.k,
        **l2_vals,
    }
    return {"case": scn.name, "checks": checks, "metrics": metrics}


def cmd_verify(args) -> tuple[RunReport, int]:
    out = _outdir(args)
    cases = args.case
    t0 = time.perf_counter()
    worker = partial(_verify_case, h_override=args.h, horizon_override=args.T,
                     kappa=args.kappa, thermal_limits=args.thermal_limits)
    if args.jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(worker, cases))
    else:
        results = [worker(c) for c in cases]
    wall = time.perf_counter() - t0

    all_ok = True
    flags = {}
    for r in results:
        print(f"verify {r['case']}:")
        for name, ok in r["checks"].items():
            val = _check_value(name, r["metrics"])
            print(f"  [{'PASS' if ok else 'FAIL'}] {name:<14} {val}")
            flags[f"{r['case']}:{name}"] = ok
            all_ok &= ok
        write_json(out / f"{r['case']}__verify.json",
                   {"case": r["case"], "checks": r["checks"],
                    "metrics": r["metrics"]})
    report = RunReport(case=",".join(cases), command="verify", config={},
                       wall_time=wall, trajectory_path=None,
                       metrics={r["case"]: r["metrics"] for r in results},
                       flags=flags)
    print(f"verify: {'all checks passed' if all_ok else 'FAILED'} "
          f"({wall:.1f}s wall)")
    return report, 0 if all_ok else 4


def _check_value(name: str, m: dict) -> str:
    if name == "kkt":
        return f"kkt_total = {m['kkt_total']:.3e} (tol {KKT_TOL:g})"
    if name == "va_monotone":
        return f"max increase = {m['va_max_increase']:.3e} (slack {VA_SLACK:g})"
    if name == "vb_monotone":
        v = m.get("vb_slack_violation")
        return f"max slack violation = {'n/a' if v is None else f'{v:.3e}'}"
    if name == "rate_bound":
        return (f"bound(t0) = {m['rate_bound_t0']:.3e}, "
                f"final = {m['rate_bound_final']:.3e}")
    if name == "lemma2":
        a, f = m.get("lemma2_angle_residual"), m.get("lemma2_flow_residual")
        if a is None:
            return "closed loop not converged"
        return f"angle = {a:.3e}, flow = {f:.3e} (tol {LEMMA2_TOL:g})"
    if name == "box_invariance":
        return f"max violation = {m['max_box_violation']:.3e} (tol {BOX_TOL:g})"
    return ""


def cmd_compare(args) -> tuple[RunReport, int]:
    net, cost, scn = load_case(args.case)
    scn, cfg = _scenario_with_overrides(scn, args)
    if cfg.mode != "closed_loop":
        raise NonpositiveParameterError("compare runs closed-loop controllers")
    out = _outdir(args)

    t0 = time.perf_counter()
    runs = [(name, _simulate(net, cost, scn, cfg, baseline=(name == "baseline")))
            for name in args.controllers]
    wall = time.perf_counter() - t0

    band = 1e-3
    comparison = []
    for name, traj in runs:
        w = np.abs(traj.data["omega"]).max(axis=1)
        above = np.flatnonzero(w >= band)
        t_band = None if above.size and above[-1] == traj.t.size - 1 else (
            float(traj.t[0]) if above.size == 0 else float(traj.t[above[-1] + 1]))
        comparison.append({
            "controller": name,
            "final_cost": _final_cost(cost, traj),
            "chatter": {str(i + 1): chatter_metric(traj, i)
                        for i in cost.controllable_indices()},
            "time_to_band": t_band,
            "omega_final_inf": float(np.max(np.abs(traj.final("omega")))),
        })
    names = [name for name, _ in runs]
    gap = None
    if len(comparison) == 2:
        gap = comparison[0]["final_cost"] - comparison[1]["final_cost"]
    payload = {"case": scn.name, "controllers": names,
               "final_cost_gap": gap, "comparison": comparison}
    tag = f"{Path(str(args.case)).stem}__compare"
    write_json(out / f"{tag}.json", payload)
    for idx, (name, traj) in enumerate(runs):
        write_trajectory_csv(out / f"{tag}__{idx}_{name}.csv", traj, net, tag)

    print(f"compare {scn.name}: controllers {names} wall={wall:.2f}s")
    for c in comparison:
        print(f"  {c['controller']:<9} cost={c['final_cost']:.6f} "
              f"time_to_band={c['time_to_band']} chatter={c['chatter']}")
    report = RunReport(case=scn.name, command="compare",
                       config=_config_echo(scn, cfg, args.seed), wall_time=wall,
                       trajectory_path=str(out / f"{tag}.json"),
                       metrics=payload, flags={})
    return report, 0


def _final_cost(cost, traj: Trajectory) -> float:
    d = traj.final("d")
    m = cost.controllable
    terms = (cost.quad * d * d + cost.lin * d
             + cost.l1_weight * np.abs(d + cost.l1_shift))
    return float(cost.k * terms[m].sum())


def _outdir(args) -> Path:
    out = os.environ.get("GRIDFREQ_OUT") or args.out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _bool_flag(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gridfreq",
        description="Load-side frequency control simulator and verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, multi_case=False):
        if multi_case:
            p.add_argument("case", nargs="+", help="bundled case name or path")
        else:
            p.add_argument("case", help="bundled case name or path")
        p.add_argument("--scenario", default=None, help="named scenario preset")
        p.add_argument("--h", type=float, default=None, help="integrator step [s]")
        p.add_argument("--T", type=float, default=None, help="horizon [s]")
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--mode", choices=["closed_loop", "pure_opt"], default=None)
        p.add_argument("--thermal-limits", dest="thermal_limits",
                       type=_bool_flag, default=None)
        p.add_argument("--k1", type=float, default=None,
                       help="damping uncertainty scale")
        p.add_argument("--k2", type=float, default=None,
                       help="frequency measurement noise amplitude")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--svg", action="store_true")
        p.add_argument("--out", default="gridfreq_out",
                       help="output directory (env GRIDFREQ_OUT overrides)")
        p.add_argument("--jobs", type=int, default=1)

    p_run = sub.add_parser("run", help="integrate one scenario, write CSV/JSON")
    common(p_run)
    p_ver = sub.add_parser("verify", help="optimality and Lyapunov checks")
    common(p_ver, multi_case=True)
    p_cmp = sub.add_parser("compare", help="DPPD vs subgradient baseline")
    common(p_cmp)
    p_cmp.add_argument("--controllers", nargs="+", default=["dppd", "baseline"],
                       choices=["dppd", "baseline"])
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            _, code = cmd_run(args)
        elif args.command == "verify":
            _, code = cmd_verify(args)
        else:
            _, code = cmd_compare(args)
        return code
    except NonFiniteStateError as exc:
        print(f"error: numeric blow-up: {exc}", file=sys.stderr)
        return 3
    except GridFreqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main_entry():  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
