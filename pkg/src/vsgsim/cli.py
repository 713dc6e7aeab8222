"""Command-line entry points.

``simulate`` runs a scenario from a TOML config and writes CSV + JSON,
``check-config`` validates a config without running, and ``design`` solves
the shoot-through duty for a requested DC-link gain.

Exit codes: 0 success, 2 validation failure, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .config import ConfigValidationError, load_config, solve_duty, validate
from .errors import DcCollapse, GainBelowUnity, IoFailure, NonPositive, NumericBlowup
from .runner import emit, run_scenario
from .ynetwork import ac_peak_voltage, boost_factor

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsgsim",
        description="Islanded-microgrid simulator: boost-type inverter with "
        "virtual-synchronous-generator control",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV + JSON")
    sim.add_argument("--config", required=True, help="TOML config file")
    sim.add_argument("--out-dir", required=True, help="output directory")
    sim.add_argument("--dt", type=float, default=None,
                     help="override the integration step [s]")
    sim.add_argument("--decimation", type=int, default=1,
                     help="record every n-th integration step")
    sim.add_argument("--seedless", action="store_true",
                     help="accepted for interface compatibility; runs are "
                          "always deterministic")

    chk = sub.add_parser("check-config", help="validate a config file")
    chk.add_argument("--config", required=True, help="TOML config file")

    des = sub.add_parser("design", help="solve the duty ratio for a DC-link gain")
    des.add_argument("--boost", type=float, required=True, help="gain target, >= 1")
    des.add_argument("--k", type=float, default=1.0, help="winding constant K")
    des.add_argument("--p", type=float, default=1.0, help="winding constant P")
    des.add_argument("--vdc", type=float, default=None,
                     help="supply voltage for the achievable-peak printout [V]")
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.dt is not None:
        scenario = dataclasses.replace(cfg.scenario, dt=args.dt)
        cfg = validate(cfg.system, cfg.control, scenario)
    out = run_scenario(cfg, decimation=args.decimation)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "timeseries.csv"
    json_path = out_dir / "summary.json"
    emit(out, csv_path, json_path)
    print(f"wrote {csv_path} ({len(out.time)} samples) and {json_path}")
    for w in out.windows:
        m = w.metrics
        print(
            f"  {w.label:<12s} [{w.t_start:.2f}, {w.t_end:.2f}] s: "
            f"P={m.p_active:8.1f} W  Q={m.q_reactive:8.1f} var  "
            f"f={m.f_est:8.4f} Hz  THD={100.0 * m.thd:6.3f} %  "
            f"eff={100.0 * m.efficiency:7.3f} %"
        )
    return EXIT_OK


def _cmd_check_config(args) -> int:
    load_config(args.config)
    print(f"{args.config}: OK")
    return EXIT_OK


def _cmd_design(args) -> int:
    duty = solve_duty(args.boost, args.k, args.p)
    gain = boost_factor(duty, args.k, args.p)
    m_ceiling = 1.0 - duty
    print(f"duty ratio      : {duty:.10f}")
    print(f"gain check      : {gain:.10f}")
    print(f"modulation limit: {m_ceiling:.10f} (1 - duty)")
    if args.vdc is not None:
        peak = ac_peak_voltage(m_ceiling, duty, args.k, args.p, args.vdc)
        print(f"link voltage    : {gain * args.vdc:.3f} V")
        print(f"max phase peak  : {peak:.3f} V at full modulation")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "check-config": _cmd_check_config,
        "design": _cmd_design,
    }
    try:
        return handlers[args.command](args)
    except (ConfigValidationError, GainBelowUnity, NonPositive, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DcCollapse, NumericBlowup) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IoFailure as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
