"""Command-line entry point: ``jpmcount <subcommand> [options]``."""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from . import liouville as lv
from . import rates as rm
from .circuit import TWO_PI, derive_levels, n_max
from .config import ConfigError, RunConfig, bundled_config, parse_config
from .output import csv_text, table_text
from .semiclassics import (
    QuadratureError, device_rates, tunneling_rate, two_level_gamma1, wkb_rates,
)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_ACCEPTANCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _hz(omega: float) -> float:
    return omega / TWO_PI


def _emit(text: str, args, filename: str) -> None:
    if args.out:
        path = Path(args.out) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _rates(cfg: RunConfig):
    return device_rates(cfg.device, cfg.tunneling)


# --- subcommands --------------------------------------------------------------

def cmd_levels(cfg: RunConfig, args) -> int:
    lv_ = derive_levels(cfg.device)
    rows = [
        ("W_J", lv_.WJ, "J"), ("W_C", lv_.WC, "J"),
        ("omega_p/2pi", _hz(lv_.omega_p), "Hz"), ("n0", lv_.n0, ""),
        ("omega10/2pi", _hz(lv_.omega10), "Hz"), ("omega20/2pi", _hz(lv_.omega20), "Hz"),
        ("omega/2pi", _hz(lv_.omega), "Hz"), ("Delta/2pi", _hz(lv_.Delta), "Hz"),
        ("phi_min", lv_.phi_min, "rad"), ("delta_max", lv_.delta_max, "rad"),
    ]
    _emit(table_text(["quantity", "value", "unit"], rows), args, "levels.txt")
    return EXIT_OK


def cmd_wkb(cfg: RunConfig, args) -> int:
    results = wkb_rates(cfg.device)
    rows = [(r.level_index, r.energy, r.turning_points[0], r.turning_points[1], r.action,
             r.rate, r.rate_hz) for r in results]
    header = ["level", "energy_J", "phi_inner_rad", "phi_outer_rad", "action_hbar",
              "rate_per_s", "rate_over_2pi_Hz"]
    _emit(csv_text(header, rows), args, "wkb.csv")
    return EXIT_OK


def cmd_rates(cfg: RunConfig, args) -> int:
    r = _rates(cfg)
    b10, ratio = rm.one_photon_absorption_rate(r)
    rows = [
        ("lambda1", r.lambda1, ""), ("lambda2", r.lambda2, ""),
        ("g1/2pi", _hz(r.g1), "Hz"), ("g2/2pi", _hz(r.g2), "Hz"),
        ("g_tilde/2pi", _hz(r.g_tilde), "Hz"),
        ("chi1/2pi", _hz(r.chi1), "Hz"), ("chi2/2pi", _hz(r.chi2), "Hz"),
        ("gamma0/2pi", _hz(r.gamma0), "Hz"), ("gamma1/2pi", _hz(r.gamma1), "Hz"),
        ("gamma2/2pi", _hz(r.gamma2), "Hz"),
        ("Gamma10/2pi", _hz(r.Gamma10), "Hz"), ("Gamma21/2pi", _hz(r.Gamma21), "Hz"),
        ("Gamma11/2pi", _hz(r.Gamma11), "Hz"), ("Gamma22/2pi", _hz(r.Gamma22), "Hz"),
        ("GammaT1/2pi", _hz(r.GammaT1), "Hz"), ("GammaT2/2pi", _hz(r.GammaT2), "Hz"),
        ("d01/2pi", _hz(r.d01), "Hz"), ("d12/2pi", _hz(r.d12), "Hz"),
        ("d02/2pi", _hz(r.d02), "Hz"),
        ("B20/2pi", _hz(r.B20), "Hz"), ("B10/2pi", _hz(b10), "Hz"),
        ("B20/B10", ratio, ""), ("N_max", n_max(r, cfg.margin), ""),
    ]
    _emit(table_text(["quantity", "value", "unit"], rows), args, "rates.txt")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    r = _rates(cfg)
    layout = lv.HilbertLayout(cfg.n_fock)
    if args.photons >= cfg.n_fock:
        raise UsageError(f"--photons must be below n_fock = {cfg.n_fock}")
    if args.hamiltonian == "effective":
        ham = lv.build_effective_hamiltonian(r.scaled(cfg.scale), layout)
    else:
        ham = lv.build_hamiltonian_rotating(r.scaled(cfg.scale), layout)
    liou = lv.build_lindbladian(r.scaled(cfg.scale), layout, ham)
    default_stop = rm.optimal_time(r).t_opt if r.B20 > r.gamma0 > 0 else 1e-6
    times = cfg.time_grid(default_stop)
    start = lv.JointState.basis(layout, args.photons, 0)
    if times[0] > 0:
        t_eval = np.concatenate([[0.0], times / cfg.scale])
    else:
        t_eval = times / cfg.scale
    traj = lv.evolve(start, liou, float(t_eval[-1]), t_eval, layout=layout)
    skip = len(t_eval) - len(times)
    pops = traj.populations()[skip:]
    click = traj.click_probabilities()[skip:]
    labels = [f"p_{layout.label(k)}" for k in range(layout.dim)]
    rows = [[t, *p, c] for t, p, c in zip(times, pops, click)]
    _emit(csv_text(["time_s", *labels, "p_click"], rows), args, "simulate.csv")
    if traj.edge_flagged:
        print(f"warning: Fock cutoff population {traj.edge_population().max():.2e} "
              "exceeds tolerance; increase n_fock", file=sys.stderr)
    return EXIT_OK


def cmd_ratecurves(cfg: RunConfig, args) -> int:
    r = _rates(cfg)
    opt = rm.optimal_time(r)
    times = cfg.time_grid(4 * opt.t_opt)
    pf = rm.p_false(times, r.gamma0)
    pb = rm.p_bright(times, r)
    err = rm.discrimination_error(times, r)
    exact = rm.p_bright_closed_form(times, r)
    rows = zip(times, pf, pb.value, 1 - pb.value, err.value, exact,
               pb.valid.astype(int))
    header = ["time_s", "p_false", "p_bright", "miss_probability", "error", "p_bright_exact",
              "valid"]
    _emit(csv_text(header, rows), args, "ratecurves.csv")
    return EXIT_OK


def _protocol_rows(report: rm.DetectionReport):
    return [
        ("t_opt", report.t_opt, "s"),
        ("P_false(t_opt)", report.p_false_at_topt, ""),
        ("P_bright(t_opt)", report.p_bright_at_topt, ""),
        ("eps_min", report.eps_min, ""),
        ("P_bright_01", report.p_bright_01, ""),
        ("eps2", report.eps2, ""),
        ("B20/2pi", _hz(report.b20), "Hz"),
        ("B10/2pi", _hz(report.b10), "Hz"),
    ]


def _check_rows(checks):
    return [(c.name, c.ratio, c.threshold, "pass" if c.passed else "FAIL") for c in checks]


def _protocol(cfg: RunConfig) -> rm.DetectionReport:
    levels = derive_levels(cfg.device)
    r = _rates(cfg)
    report = rm.two_step_error(r, two_level_gamma1(cfg.device, cfg.tunneling))
    report.validity = rm.validity_report(cfg.device, levels, r, report.t_opt,
                                         factor=cfg.mleq_factor, margin=cfg.margin)
    return report


def cmd_protocol(cfg: RunConfig, args) -> int:
    report = _protocol(cfg)
    text = table_text(["quantity", "value", "unit"], _protocol_rows(report))
    text += "\n" + table_text(["condition", "ratio", "threshold", "status"],
                              _check_rows(report.validity))
    _emit(text, args, "protocol.txt")
    return EXIT_OK


def cmd_table1(cfg: RunConfig, args) -> int:
    results = harness.reproduce_table1(cfg.device, cfg.margin)
    rows = [(r.quantity, r.unit, r.reference, r.computed, r.deviation, r.tolerance, r.mode,
             "pass" if r.passed else "FAIL") for r in results]
    header = ["quantity", "unit", "reference", "computed", "deviation", "tolerance", "mode",
              "status"]
    _emit(table_text(header, rows), args, "table1.txt")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def cmd_check(cfg: RunConfig, args) -> int:
    levels = derive_levels(cfg.device)
    r = _rates(cfg)
    t = args.time if args.time is not None else rm.optimal_time(r).t_opt
    checks = rm.validity_report(cfg.device, levels, r, t, factor=cfg.mleq_factor,
                                margin=cfg.margin)
    _emit(table_text(["condition", "ratio", "threshold", "status"], _check_rows(checks)),
          args, "check.txt")
    return EXIT_OK


SWEEP_HEADER = [
    "gamma0_wkb_Hz", "gamma1_wkb_Hz", "gamma2_wkb_Hz", "B20_Hz", "t_opt_s",
    "p_false", "p_bright", "eps_min", "p_bright_01", "eps2", "checks_passed",
]


def _sweep_point(cfg: RunConfig) -> list[float]:
    wkb = []
    levels = derive_levels(cfg.device)
    for n in range(3):
        try:
            wkb.append(tunneling_rate(n, levels, cfg.device).rate_hz)
        except (ValueError, QuadratureError):
            wkb.append(math.nan)
    try:
        rep = _protocol(cfg)
    except (ValueError, QuadratureError):
        return wkb + [math.nan] * (len(SWEEP_HEADER) - 3)
    passed = sum(c.passed for c in rep.validity)
    return wkb + [_hz(rep.b20), rep.t_opt, rep.p_false_at_topt, rep.p_bright_at_topt,
                  rep.eps_min, rep.p_bright_01, rep.eps2, passed]


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(".."))
    except ValueError:
        raise UsageError(f"range must look like LO..HI, got {text!r}") from None
    return lo, hi


def cmd_sweep(cfg: RunConfig, args) -> int:
    axes = [(args.field, _parse_range(args.range), args.points)]
    if args.field2:
        if not args.range2:
            raise UsageError("--field2 needs --range2")
        axes.append((args.field2, _parse_range(args.range2), args.points2))
    for name, _, points in axes:
        if name not in {f for f in cfg.device.__dataclass_fields__}:
            raise UsageError(f"unknown config field {name!r}")
        if points < 2:
            raise UsageError("a sweep needs at least two points")
    grids = [np.linspace(lo, hi, pts) for _, (lo, hi), pts in axes]
    mesh = np.meshgrid(*grids, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    configs = [cfg.replace_device(**{name: float(v) for (name, _, _), v in zip(axes, p)})
               for p in points]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(c) for c in configs]
    header = [name for name, _, _ in axes] + SWEEP_HEADER
    rows = [[*p, *res] for p, res in zip(points, results)]
    _emit(csv_text(header, rows), args, "sweep.csv")
    return EXIT_OK


COMMANDS = {
    "levels": (cmd_levels, "derived well quantities"),
    "wkb": (cmd_wkb, "WKB tunneling rates of the three lowest levels"),
    "rates": (cmd_rates, "couplings, decoherence and absorption rates"),
    "simulate": (cmd_simulate, "master-equation trajectory (CSV)"),
    "ratecurves": (cmd_ratecurves, "count probabilities and error against time (CSV)"),
    "protocol": (cmd_protocol, "two-step counting report with validity checks"),
    "table1": (cmd_table1, "compare against the reference device table"),
    "check": (cmd_check, "model validity conditions"),
    "sweep": (cmd_sweep, "grid over one or two config fields (CSV)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (default: bundled table1.cfg)")
    common.add_argument("--out", help="write the output file into this directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    common.add_argument("--mleq-factor", type=float, help="ratio that counts as '<<'")
    common.add_argument("--margin", type=float, help="N_max margin")

    parser = argparse.ArgumentParser(prog="jpmcount", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parsers = {name: sub.add_parser(name, parents=[common], help=text)
               for name, (_, text) in COMMANDS.items()}
    parsers["simulate"].add_argument("--photons", type=int, default=2,
                                     help="initial Fock number (JPM in its ground level)")
    parsers["simulate"].add_argument("--hamiltonian", choices=("effective", "rotating"),
                                     default="effective")
    parsers["check"].add_argument("--time", type=float, help="waiting time in s (default t_opt)")
    sw = parsers["sweep"]
    sw.add_argument("field")
    sw.add_argument("range", help="LO..HI")
    sw.add_argument("--points", type=int, default=11)
    sw.add_argument("--field2")
    sw.add_argument("--range2")
    sw.add_argument("--points2", type=int, default=11)
    return parser


def load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else bundled_config()
    if args.margin is not None:
        if args.margin <= 0:
            raise UsageError("--margin must be positive")
        cfg = replace(cfg, margin=args.margin)
    if args.mleq_factor is not None:
        if args.mleq_factor <= 0:
            raise UsageError("--mleq-factor must be positive")
        cfg = replace(cfg, mleq_factor=args.mleq_factor)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.out is None:
            args.out = cfg.out_dir
        return COMMANDS[args.command][0](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"jpmcount: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"jpmcount: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
