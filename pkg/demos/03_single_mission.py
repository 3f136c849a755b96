"""One search mission, flown by each planner in turn.

Builds a single two-target scenario 10 km offshore and lets the expanding
spiral, the boustrophedon rectangles, and the branch-and-bound planner fly
it, writing one SVG trajectory plot per planner next to this script.
"""

import os
from dataclasses import replace

from sarsim import PlannerSpec, ScenarioSpec, generate_scenario, run_simulation
from sarsim.plots import emit_run_svg

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

base = ScenarioSpec(planner=PlannerSpec(name="spiral"), distance_km=10.0,
                    runs=1, master_seed=11, endurance_s=7200.0, record_trace=True)

planners = {
    "spiral": PlannerSpec(name="spiral"),
    "boustrophedon": PlannerSpec(name="boustrophedon"),
    "bnb50": PlannerSpec(name="bnb", bnb_budget_min=50.0, bnb_horizon=8, bnb_beam=64),
}

for label, pspec in planners.items():
    cfg = generate_scenario(replace(base, planner=pspec), run_index=0)
    record = run_simulation(cfg)
    minutes = record.n_ticks * record.dt_s / 60.0
    firsts = [f"target {k} at {t/60:.1f} min" for k, t in record.found_events]
    print(f"{label:>13}: found {record.found_count}/{record.n_targets} "
          f"in {minutes:.0f} min ({record.termination})"
          + (f" - {', '.join(firsts)}" if firsts else ""))
    svg = os.path.join(OUT_DIR, f"mission_{label}.svg")
    emit_run_svg(record, cfg.world, svg)
    print(f"{'':>15}trajectory plot: {svg}")
