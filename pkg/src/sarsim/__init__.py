"""Maritime search-and-rescue UAV trajectory planning sandbox."""

from .belief import (BeliefExhausted, ParticleEnsemble, Rect,
                     containment_rect_from_grid)
from .drift import DriftParams, TruthTarget, drift_step, init_ensemble, sample_truth
from .engine import (PlannerError, RunRecord, SimConfig, Simulation,
                     SyntheticFieldSpec, TargetOutcome, TargetSpec, UavSpec,
                     config_from_json, config_to_json, run_simulation)
from .environment import (ConfigError, FieldFileError, FieldGenParams, FieldPair,
                          GridWorld, VectorField, generate_synthetic_fields,
                          load_fields, save_fields)
from .harness import (MetricsTable, PlannerMetrics, RunSummary, ScenarioSpec,
                      STANDARD_PLANNERS, compare_planners, generate_scenario,
                      read_metrics_csv, run_batch, run_experiment, run_one,
                      write_metrics_csv)
from .planners import (BnBConfig, BnBPlanner, BnBResult, BoustrophedonPlanner,
                       FirstTargetOnlyPlanner, PlannerCommand, PlannerObservation,
                       PlannerSpec, SpiralPlanner, bnb_search, build_planner,
                       exact_oracle, order_targets, serpentine_cells,
                       spiral_offsets, transit_step)
from .plots import emit_metrics_svg, emit_run_svg

__version__ = "0.1.0"
