"""Command line entry point: ``patchfront <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 theorem-violation flag.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import (IndeterminateRegime, RegimeReport, Side, classify_regime,
                       fit_front_shift, inverse_scaling_map, level_position, scaling_map)
from .cauchy import Grid, initial_datum, solve
from .config import ScenarioConfig, load_config, load_sweep
from .errors import ConfigError, NumericalError, PatchfrontError, TheoremViolation
from .reaction import MassSign, Verdict, parse_reaction
from .stationary import (construct_U, construct_V, construct_half_bump,
                         solve_interface_value_U, solve_interface_value_V)
from .storage import FMT, read_trajectory, write_columns, write_trajectory
from .waves import bistable_front, kpp_speed

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_THEOREM = 0, 2, 3, 4
REPORT_COLUMNS = ("verdict", "speed_left", "speed_right", "xi", "final_supnorm",
                  "evidence_json_path")


# --- scenario helpers -----------------------------------------------------------

def build_datum(cfg: ScenarioConfig, grid: Grid):
    p = cfg.params()
    if cfg.datum == "half_bump":
        if "psi0" not in p:
            raise ConfigError("half_bump datum needs psi0")
        m = cfg.model()
        prof = construct_half_bump(m.f2, m.d2, p["psi0"])
        return initial_datum("half_bump", dict(x0=p.get("x0", prof.radius), profile=prof), grid)
    return initial_datum(cfg.datum, p, grid)


def simulate(cfg: ScenarioConfig):
    T = cfg.T
    grid = Grid.covering(cfg.h, cfg.domain_left, cfg.domain_right)
    u0 = build_datum(cfg, grid)
    times = [t for t in cfg.times() if t <= T]
    return solve(cfg.model(), u0, T, output_times=times, expand=cfg.expand,
                 order=cfg.interface_order)


def front_shift(traj, cfg: ScenarioConfig) -> Optional[float]:
    """Shift of the final snapshot against the patch-2 front, when one exists."""
    m = cfg.model()
    cls = m.f2.classify()
    if cls.verdict is not Verdict.BISTABLE or cls.mass_sign is not MassSign.POSITIVE:
        return None
    s = traj.final
    x_lvl = level_position(s, 0.5 * m.f2.K, Side.RIGHT)
    if x_lvl is None or x_lvl <= 0:
        return None
    front = bistable_front(m.f2, m.d2)
    region = (max(0.5 * x_lvl, x_lvl - 15.0), float(s.x[-1]))
    try:
        xi, _ = fit_front_shift(s, front, region, front.c, s.t)
    except ConfigError:
        return None
    return xi


def classify(traj, cfg: ScenarioConfig):
    """RegimeReport plus front shift; Indeterminate yields (None, evidence)."""
    try:
        rep = classify_regime(traj, cfg.model(), cfg.regime_options())
    except IndeterminateRegime as exc:
        return None, exc.evidence
    xi = front_shift(traj, cfg) if rep.verdict.value == "Propagating" else None
    return RegimeReport(rep.verdict, rep.speed_right, rep.speed_left, xi, rep.final_supnorm,
                        rep.evidence), rep.evidence


def _num(v) -> str:
    return "" if v is None else FMT % v


def _report_row(rep: Optional[RegimeReport], final_sup: float, evidence_path: str):
    if rep is None:
        return ("Indeterminate", "", "", "", FMT % final_sup, evidence_path)
    return (rep.verdict.value, _num(rep.speed_left), _num(rep.speed_right), _num(rep.shift_xi),
            FMT % rep.final_supnorm, evidence_path)


def _write_report(path: str, rep, evidence, final_sup: float) -> str:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    stem = os.path.splitext(os.path.basename(path))[0]
    ev_path = os.path.join(d, f"{stem}_evidence.json")
    with open(ev_path, "w", encoding="utf-8") as fh:
        json.dump(evidence, fh, indent=1, sort_keys=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerow(_report_row(rep, final_sup, os.path.basename(ev_path)))
    return ev_path


def _summary(rep, final_sup: float) -> str:
    if rep is None:
        return f"verdict=Indeterminate final_supnorm={final_sup:.6g}"
    parts = [f"verdict={rep.verdict.value}"]
    for k, v in (("speed_left", rep.speed_left), ("speed_right", rep.speed_right),
                 ("xi", rep.shift_xi)):
        if v is not None:
            parts.append(f"{k}={v:.6f}")
    parts.append(f"final_supnorm={rep.final_supnorm:.6g}")
    return " ".join(parts)


def _need(args, name):
    v = getattr(args, name)
    if v is None:
        raise ConfigError(f"--{name} is required for this subcommand")
    return v


# --- subcommands ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(_need(args, "config"))
    out = _need(args, "out")
    if args.T is not None:
        times = cfg.output_times
        if times is not None:
            times = tuple(t for t in times if t <= args.T) or None
        cfg = replace(cfg, T=float(args.T), output_times=times)
    traj = simulate(cfg)
    write_trajectory(out, traj, cfg)
    with open(os.path.join(out, "run_info.csv"), "w", encoding="utf-8") as fh:
        fh.write("key,value\n")
        fh.write(f"dt,{FMT % traj.dt}\nsteps,{traj.steps}\nclipped,{traj.clipped}\n")
        fh.write(f"seed,{args.seed}\nversion,{__version__}\n")
    s = traj.final
    line = (f"simulated T={s.t:g} snapshots={len(traj.snapshots)} "
            f"domain=[{s.x[0]:g},{s.x[-1]:g}] final_supnorm={s.sup():.6g}")
    code = EXIT_OK
    if args.classify:
        rep, ev = classify(traj, cfg)
        _write_report(os.path.join(out, "report.csv"), rep, ev, s.sup())
        line += " " + _summary(rep, s.sup())
        code = EXIT_OK if rep is not None else EXIT_NUMERIC
    print(line)
    return code


def cmd_classify(args) -> int:
    cfg = load_config(args.config) if args.config else None
    traj, cfg = read_trajectory(_need(args, "traj"), cfg)
    out = args.out or os.path.join(args.traj, "report.csv")
    rep, ev = classify(traj, cfg)
    _write_report(out, rep, ev, traj.final.sup())
    print(_summary(rep, traj.final.sup()))
    return EXIT_OK if rep is not None else EXIT_NUMERIC


def cmd_stationary(args) -> int:
    cfg = load_config(_need(args, "config"))
    m = cfg.model()
    if args.kind == "bump":
        psi0 = args.psi0 if args.psi0 is not None else cfg.params().get("psi0")
        if psi0 is None:
            raise ConfigError("--psi0 is required for --kind bump")
        p = construct_half_bump(m.f2, m.d2, float(psi0))
        xs = np.concatenate([-p.x_right[:0:-1], p.x_right])
        us = np.concatenate([p.u_right[:0:-1], p.u_right])
        if args.out:
            write_columns(args.out, ("x", "u"), (xs, us))
        print(f"radius={p.radius:.6f} psi0={p.xi:.6f} radius_full={FMT % p.radius}")
        return EXIT_OK
    if args.kind == "U":
        ver = solve_interface_value_U(m)
        roots = list(ver.roots)
        rule = ver.rule.value
        build = construct_U
    else:
        roots = solve_interface_value_V(m)
        rule = "connection_K1_K2"
        build = construct_V
    if not roots:
        print(f"no {args.kind} root rule={rule}")
        return EXIT_OK
    if not 0 <= args.root < len(roots):
        raise ConfigError(f"--root {args.root} out of range for {len(roots)} roots")
    xi = roots[args.root]
    p = build(m, xi)
    if args.out:
        write_columns(args.out, ("x", "u"), (p.x, p.u))
    print(f"xi={xi:.6f} xi_full={FMT % xi} rule={rule} roots="
          + ";".join(FMT % r for r in roots))
    return EXIT_OK


def cmd_wave(args) -> int:
    cfg = load_config(_need(args, "config"))
    m = cfg.model()
    d, f = m.side(args.patch)
    cls = f.classify()
    if cls.verdict is Verdict.KPP:
        data = kpp_speed(f, d)
        print(f"c={data.c_star:.6f} c_full={FMT % data.c_star} kind=kpp")
        return EXIT_OK
    if cls.verdict is not Verdict.BISTABLE:
        raise ConfigError(f"patch {args.patch} reaction is neither KPP nor bistable")
    fr = bistable_front(f, d)
    header = f"c={FMT % fr.c} alpha={FMT % fr.decay_alpha} beta={FMT % fr.decay_beta}"
    if args.out:
        write_columns(args.out, ("s", "phi"), (fr.s, fr.phi), comment=header)
    print(f"c={fr.c:.6f} alpha={fr.decay_alpha:.6f} beta={fr.decay_beta:.6f} c_full={FMT % fr.c}")
    return EXIT_OK


def _sweep_point(cfg: ScenarioConfig):
    try:
        traj = simulate(cfg)
    except NumericalError as exc:
        return ("NumericalFailure", None, None, None, math.nan, str(exc))
    rep, _ = classify(traj, cfg)
    sup = traj.final.sup()
    if rep is None:
        return ("Indeterminate", None, None, None, sup, "")
    return (rep.verdict.value, rep.speed_left, rep.speed_right, rep.shift_xi, sup, "")


def cmd_sweep(args) -> int:
    sw = load_sweep(_need(args, "grid"))
    out = _need(args, "out")
    points = sw.points()
    threads = max(1, args.threads or 1)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda pc: _sweep_point(pc[1]), points))
    names = [a for a, _ in sw.axes]
    d = os.path.dirname(os.path.abspath(out))
    os.makedirs(d, exist_ok=True)
    counts = {}
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("point", *names, "verdict", "speed_left", "speed_right", "xi",
                    "final_supnorm", "note"))
        for i, ((vals, _), res) in enumerate(zip(points, results)):
            verdict, sl, sr, xi, sup, note = res
            counts[verdict] = counts.get(verdict, 0) + 1
            w.writerow((i, *(vals[n] for n in names), verdict, _num(sl), _num(sr), _num(xi),
                        FMT % sup, note))
    print(f"sweep points={len(points)} " + " ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_scale(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        d1, d2, f2 = cfg.d1, cfg.d2, cfg.f2
    else:
        d1, d2, f2 = args.d1, args.d2, args.f2
    if f2 is None:
        raise ConfigError("--f2 (or --config) is required")
    f = parse_reaction(f2)
    if args.inverse:
        sigma = _need(args, "sigma")
        alpha, ft = inverse_scaling_map(sigma, d1, d2, f)
        rows = (("pref_alpha", alpha), ("sigma", sigma), ("f2_tilde", ft.to_config()))
    else:
        alpha = _need(args, "alpha")
        sigma, k, g = scaling_map(alpha, d1, d2, f)
        rows = (("pref_alpha", alpha), ("sigma", sigma), ("k", k), ("f2", g.to_config()))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("key", "value"))
            w.writerows((k, FMT % v if isinstance(v, float) else v) for k, v in rows)
    print(" ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in rows))
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (key = value lines)")
    common.add_argument("--out", help="output path (directory for simulate)")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with the run")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweep")
    p = argparse.ArgumentParser(prog="patchfront", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"patchfront {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="integrate the Cauchy problem")
    s.add_argument("--T", type=float, help="override the final time")
    s.add_argument("--classify", action="store_true", help="also write report.csv")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("stationary", parents=[common], help="steady states U, V or half bump")
    s.add_argument("--kind", choices=("U", "V", "bump"), required=True)
    s.add_argument("--root", type=int, default=0, help="which interface value to use")
    s.add_argument("--psi0", type=float, help="top value of the half bump")
    s.set_defaults(func=cmd_stationary)

    s = sub.add_parser("wave", parents=[common], help="travelling front of one patch")
    s.add_argument("--patch", type=int, choices=(1, 2), default=2)
    s.set_defaults(func=cmd_wave)

    s = sub.add_parser("classify", parents=[common], help="regime of a stored trajectory")
    s.add_argument("--traj", required=True, help="directory written by simulate")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("sweep", parents=[common], help="classify over a parameter grid")
    s.add_argument("--grid", required=True, help="sweep file with 'vary key = ...' lines")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("scale", parents=[common], help="density scaling map")
    s.add_argument("--alpha", type=float, help="interface preference in (0, 1)")
    s.add_argument("--sigma", type=float, help="flux ratio, for --inverse")
    s.add_argument("--d1", type=float, default=1.0)
    s.add_argument("--d2", type=float, default=1.0)
    s.add_argument("--f2", help="patch-2 reaction, e.g. 'cubic(K=1, theta=0.25)'")
    s.add_argument("--inverse", action="store_true")
    s.set_defaults(func=cmd_scale)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TheoremViolation as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        return EXIT_THEOREM
    except (PatchfrontError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
