"""Command line front end: field generation, single runs, batch experiments.

Exit codes: 0 on success, 1 for configuration problems (bad arguments,
invalid config files, malformed field files), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import config_from_json, run_simulation
from .environment import (ConfigError, FieldFileError, FieldGenParams,
                          generate_synthetic_fields, save_fields)
from .harness import (STANDARD_PLANNERS, ScenarioSpec, MetricsTable,
                      compare_planners, run_experiment, write_metrics_csv)
from .planners import PlannerSpec
from .plots import emit_metrics_svg, emit_run_svg


def _cmd_gen_fields(args) -> int:
    extent = (0.0, 0.0, args.extent_km * 1000.0, args.extent_km * 1000.0)
    params = FieldGenParams(n_gyres=args.gyres, current_max_ms=args.current_max,
                            wind_max_ms=args.wind_max)
    fields = generate_synthetic_fields(args.seed, extent, args.duration_h * 3600.0, params)
    save_fields(fields, args.out)
    print(f"wrote {args.out}: {fields.current.nt} frames, "
          f"{fields.current.nx}x{fields.current.ny} nodes per field")
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = config_from_json(json.load(fh))
    record = run_simulation(cfg)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    record.write_summary(os.path.join(out_dir, "summary.json"))
    if cfg.record_trace:
        record.write_log(os.path.join(out_dir, "runlog.jsonl"))
    if args.plot:
        os.makedirs(args.plot, exist_ok=True)
        emit_run_svg(record, cfg.world, os.path.join(args.plot, "run.svg"))
    print(f"{record.termination}: found {record.found_count}/{record.n_targets} "
          f"targets in {record.n_ticks} ticks ({record.n_ticks * record.dt_s / 60.0:.1f} min)")
    return 0


def _planner_spec_from_args(args) -> PlannerSpec:
    return PlannerSpec(name=args.planner, eta=args.eta,
                       bnb_budget_min=args.bnb_budget_min,
                       bnb_horizon=args.bnb_horizon,
                       bnb_beam=None if args.bnb_beam == 0 else args.bnb_beam,
                       bnb_vicinity_r=args.bnb_vicinity_r)


def _cmd_experiment(args) -> int:
    spec = ScenarioSpec(planner=_planner_spec_from_args(args),
                        distance_km=args.distance_km, runs=args.runs,
                        master_seed=args.seed,
                        endurance_s=args.endurance_h * 3600.0)
    metrics = run_experiment(spec, workers=args.workers)
    table = MetricsTable(distance_km=args.distance_km, runs=args.runs,
                         rows={args.planner: metrics})
    print(table.to_text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_metrics_csv([table], os.path.join(args.out, "metrics.csv"))
        with open(os.path.join(args.out, "metrics.txt"), "w", encoding="utf-8") as fh:
            fh.write(table.to_text() + "\n")
    return 0


def _cmd_compare(args) -> int:
    distances = [float(d) for d in args.distances.split(",") if d]
    tables = compare_planners(distances, runs=args.runs, master_seed=args.seed,
                              workers=args.workers,
                              bnb_horizon=args.bnb_horizon,
                              bnb_beam=None if args.bnb_beam == 0 else args.bnb_beam)
    for table in tables:
        print(table.to_text())
        print()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_metrics_csv(tables, os.path.join(args.out, "metrics.csv"))
        with open(os.path.join(args.out, "metrics.txt"), "w", encoding="utf-8") as fh:
            for table in tables:
                fh.write(table.to_text() + "\n\n")
        for table in tables:
            emit_metrics_svg(table, os.path.join(args.out, f"success_{table.distance_km:g}km.svg"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sarsim",
                                     description="Maritime SAR trajectory planning sandbox")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-fields", help="generate synthetic current/wind fields")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--gyres", type=int, default=4)
    g.add_argument("--current-max", type=float, default=1.0, help="m/s cap")
    g.add_argument("--wind-max", type=float, default=12.0, help="m/s cap")
    g.add_argument("--extent-km", type=float, default=250.0)
    g.add_argument("--duration-h", type=float, default=6.0)
    g.set_defaults(func=_cmd_gen_fields)

    s = sub.add_parser("simulate", help="run one mission from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None, help="directory for summary.json/runlog.jsonl")
    s.add_argument("--plot", default=None, help="directory for SVG plots")
    s.set_defaults(func=_cmd_simulate)

    def add_planner_args(p, with_choice=True):
        if with_choice:
            p.add_argument("--planner", choices=["spiral", "boustrophedon", "bnb"],
                           required=True)
        p.add_argument("--eta", type=float, default=0.75)
        p.add_argument("--bnb-budget-min", type=float, default=50.0)
        p.add_argument("--bnb-horizon", type=int, default=8)
        p.add_argument("--bnb-beam", type=int, default=64, help="0 for unlimited")
        p.add_argument("--bnb-vicinity-r", type=int, default=3)

    e = sub.add_parser("experiment", help="batch runs for one planner at one distance")
    add_planner_args(e)
    e.add_argument("--distance-km", type=float, required=True)
    e.add_argument("--runs", type=int, required=True)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--endurance-h", type=float, default=2.0)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--out", default=None)
    e.set_defaults(func=_cmd_experiment)

    c = sub.add_parser("compare", help="all planners across distances")
    add_planner_args(c, with_choice=False)
    c.add_argument("--distances", default="10,20,30")
    c.add_argument("--runs", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--workers", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage problems are config errors here
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, FieldFileError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
