"""Command line entry point: ``lossnet {evaluate,simulate,compare,plan}``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import ExitStack

from . import network, planner
from .config import bundled_config_path, parse_config
from .errors import LossNetError
from .planner import Scenario, STANDARD_SCENARIOS
from .simulator import simulate_unit

FORMATS = ("text", "delimited")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="network config file (default: bundled NCLPN network)")
    p.add_argument("--unit", action="append", default=None, help="restrict to a unit name (repeatable)")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.add_argument("--h2-scv", type=float, default=None, help="scv for H2 entries without one (default: config)")


def _sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None, help="days")
    p.add_argument("--warmup", type=float, default=None, help="days")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossnet",
        description="Rejection and overflow probabilities for neonatal unit loss networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="two-moment rejection/overflow probabilities per unit")
    _common(p)

    p = sub.add_parser("simulate", help="discrete-event simulation estimates per unit")
    _common(p)
    _sim_flags(p)
    p.add_argument("--event-log", default=None, help="write a JSON-lines event log to this path")
    p.add_argument("--debug", action="store_true", help="check capacity and conservation at every event")

    p = sub.add_parser("compare", help="observed vs estimated rejection table over scenarios")
    _common(p)
    _sim_flags(p)
    p.add_argument("--scenarios", default=None,
                   help="comma-separated list such as MM,E2M,H2/E2 (default: all nine)")
    p.add_argument("--no-simulate", action="store_true", help="estimates only, no observed column")
    p.add_argument("--ape-threshold", type=float, default=planner.APE_THRESHOLD)

    p = sub.add_parser("plan", help="minimal cot counts meeting a rejection target")
    _common(p)
    p.add_argument("--target", type=float, default=None, help="rejection target (default: config)")
    p.add_argument("--margin", type=int, default=planner.SEARCH_MARGIN, help="extra cots searched per pool")
    return parser


def _units(config, args):
    units = config.models(args.h2_scv)
    if args.unit:
        known = {u.name for u in units}
        missing = [n for n in args.unit if n not in known]
        if missing:
            raise LossNetError(f"unknown unit(s): {', '.join(missing)}")
        units = [u for u in units if u.name in args.unit]
    return units


def _table(header, rows, fmt) -> str:
    if fmt == "delimited":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) if i < 2 else str(c).rjust(w)
                       for i, (c, w) in enumerate(zip(r, widths))).rstrip()
             for r in [header, *rows]]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def _p(x) -> str:
    return "" if x is None else f"{x:.4f}"


def cmd_evaluate(config, args, out):
    rows = []
    for unit in _units(config, args):
        try:
            ev = network.evaluate(unit)
        except LossNetError as exc:
            raise type(exc)(f"unit {unit.name}: {exc}") from exc
        for i, label in enumerate(unit.level.care_labels):
            overflow = ev.overflow[i] if ev.overflow is not None else None
            rows.append([unit.name, label, _p(ev.rejection[i]), _p(overflow)])
    out.write(_table(["unit", "care_level", "rejection", "overflow"], rows, args.format))


def _sim_settings(config, args):
    s = config.simulation
    return {
        key: getattr(s, key) if getattr(args, key) is None else getattr(args, key)
        for key in ("horizon", "warmup", "reps", "seed")
    }


def cmd_simulate(config, args, out):
    settings = _sim_settings(config, args)
    rows = []
    with ExitStack() as stack:
        log = stack.enter_context(open(args.event_log, "w", encoding="utf-8")) if args.event_log else None
        for unit in _units(config, args):
            try:
                res = simulate_unit(unit, debug=args.debug, event_log=log, **settings)
            except LossNetError as exc:
                raise type(exc)(f"unit {unit.name}: {exc}") from exc
            for i, label in enumerate(unit.level.care_labels):
                rows.append([
                    unit.name, label, int(res.arrivals[i]), int(res.admitted[i]), int(res.overflowed[i]),
                    int(res.rejected[i]), _p(res.rejection[i]), _p(res.rejection_half_width[i]),
                    _p(res.overflow[i]), _p(res.overflow_half_width[i]),
                ])
    header = ["unit", "care_level", "arrivals", "admitted", "overflowed", "rejected",
              "rejection", "rej_ci95", "overflow", "ovf_ci95"]
    out.write(_table(header, rows, args.format))
    if args.format == "text":
        out.write(f"reps={settings['reps']} horizon={settings['horizon']:g} "
                  f"warmup={settings['warmup']:g} seed={settings['seed']}\n")


def cmd_compare(config, args, out):
    scenarios = STANDARD_SCENARIOS
    if args.scenarios:
        try:
            scenarios = tuple(Scenario.parse(s) for s in args.scenarios.split(",") if s.strip())
        except ValueError as exc:
            raise LossNetError(str(exc)) from None
    h2_scv = config.h2_scv if args.h2_scv is None else args.h2_scv
    observe = None
    if not args.no_simulate:
        settings = _sim_settings(config, args)

        def observe(unit):
            return simulate_unit(unit, **settings).rejection
    rows = []
    for unit in _units(config, args):
        for scenario in scenarios:
            try:
                rows += planner.build_report([unit], [scenario], observe, h2_scv, args.ape_threshold)
            except LossNetError as exc:
                raise type(exc)(f"unit {unit.name}, scenario {scenario.label}: {exc}") from exc
    out.write(planner.render_report(rows, args.format, args.ape_threshold))


def cmd_plan(config, args, out):
    target = config.target if args.target is None else args.target
    rows = []
    for unit in _units(config, args):
        used = {network.Level.L1: 1, network.Level.L1_ITU: 2, network.Level.L32: 3}[unit.level]
        bounds = tuple(c + args.margin if i < used else 0 for i, c in enumerate(unit.cots))
        try:
            plan = planner.min_cots(unit, target, bounds)
        except LossNetError as exc:
            raise type(exc)(f"unit {unit.name}: {exc}") from exc
        for i, label in enumerate(unit.level.care_labels):
            rows.append([unit.name, label, unit.cots[i], plan.cots[i], _p(plan.achieved[i])])
        if unit.level is network.Level.L32:
            rows.append([unit.name, "TC", unit.cots[2], plan.cots[2], ""])
    out.write(_table(["unit", "pool", "current", "required", "rejection"], rows, args.format))
    if args.format == "text":
        out.write(f"target={target:g}\n")


COMMANDS = {"evaluate": cmd_evaluate, "simulate": cmd_simulate, "compare": cmd_compare, "plan": cmd_plan}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config or bundled_config_path())
        COMMANDS[args.command](config, args, out)
    except LossNetError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
