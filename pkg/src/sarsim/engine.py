"""Time-stepped mission simulation binding fields, drift, belief, and planner.

One tick moves the UAV one grid cell, so the tick length is cell size over
airspeed. Each tick: everything afloat drifts one step, the planner issues a
move, and the cell flown to is observed. Observing a cell either detects a
true target sitting in it (the sensor is assumed perfect at the simulated
altitude) or feeds a negative measurement to every remaining belief. The
take-off cell is observed once at the start of the first tick.

Runs are bit-reproducible: every random stream is derived from the config
seed, and planners are deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .belief import ParticleEnsemble
from .drift import (DriftParams, EffectiveDrift, TruthTarget, drift_step,
                    init_ensemble, sample_truth)
from .environment import (ConfigError, FieldGenParams, FieldPair, GridWorld,
                          generate_synthetic_fields, load_fields)
from .planners import PlannerObservation, PlannerSpec, build_planner


class PlannerError(RuntimeError):
    """A planner emitted an illegal command (non-neighbor or off-grid cell)."""


@dataclass(frozen=True)
class UavSpec:
    speed_ms: float = 18.0
    endurance_s: float = 7200.0
    start_cell: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.speed_ms <= 0:
            raise ConfigError(f"speed must be positive, got {self.speed_ms}")
        if self.endurance_s <= 0:
            raise ConfigError(f"endurance must be positive, got {self.endurance_s}")


@dataclass(frozen=True)
class TargetSpec:
    center: tuple[float, float]
    sigma_m: float = 1000.0
    particles: int = 10_000


@dataclass(frozen=True)
class SyntheticFieldSpec:
    seed: int
    duration_s: float
    params: FieldGenParams = field(default_factory=FieldGenParams)


@dataclass
class SimConfig:
    """Everything one simulation needs; deterministic given ``seed``.

    ``fields`` is a source: a ready FieldPair, a SyntheticFieldSpec, or a
    path to a field file.
    """

    world: GridWorld
    fields: FieldPair | SyntheticFieldSpec | str
    drift: DriftParams
    planner: PlannerSpec
    uav: UavSpec
    targets: list[TargetSpec]
    miss_prob: float = 0.0
    seed: int = 0
    record_trace: bool = True

    @property
    def dt_s(self) -> float:
        return self.world.cell_size / self.uav.speed_ms

    def max_ticks(self) -> int:
        return int(math.floor(self.uav.endurance_s * self.uav.speed_ms
                              / self.world.cell_size + 1e-9))


def resolve_fields(cfg: SimConfig) -> FieldPair:
    if isinstance(cfg.fields, FieldPair):
        return cfg.fields
    if isinstance(cfg.fields, SyntheticFieldSpec):
        spec = cfg.fields
        return generate_synthetic_fields(spec.seed, cfg.world.extent, spec.duration_s,
                                         spec.params)
    return load_fields(cfg.fields)


def validate_config(cfg: SimConfig, fields: FieldPair) -> None:
    """Reject inconsistent configs before the loop starts."""
    if abs(cfg.drift.dt_s - cfg.dt_s) > 1e-9:
        raise ConfigError(
            f"drift step {cfg.drift.dt_s} s must equal the engine tick "
            f"cell_size/speed = {cfg.dt_s} s")
    if not fields.covers(cfg.world.extent, cfg.uav.endurance_s):
        raise ConfigError("fields do not cover the grid extent over the full endurance")
    if not cfg.world.contains_cell(*cfg.uav.start_cell):
        raise ConfigError(f"start cell {cfg.uav.start_cell} outside the grid")
    if not cfg.targets:
        raise ConfigError("need at least one target")
    xmin, ymin, xmax, ymax = cfg.world.extent
    for k, tgt in enumerate(cfg.targets):
        x, y = tgt.center
        if not (xmin <= x < xmax and ymin <= y < ymax):
            raise ConfigError(f"target {k} center {tgt.center} outside the grid")
        if tgt.particles < 1 or tgt.sigma_m <= 0:
            raise ConfigError(f"target {k} needs particles >= 1 and sigma > 0")
    if not 0.0 <= cfg.miss_prob < 1.0:
        raise ConfigError(f"miss_prob must be in [0, 1), got {cfg.miss_prob}")


@dataclass
class TargetOutcome:
    found: bool
    found_time_s: float | None
    belief_exhausted: bool


@dataclass
class RunRecord:
    """Event log and outcome of one simulation."""

    dt_s: float
    n_ticks: int
    outcomes: list[TargetOutcome]
    found_events: list[tuple[int, float]]           # (target index, time s)
    termination: str                                # all-found | endurance-exhausted | belief-exhausted
    trace_cells: np.ndarray | None = None           # (n_ticks, 2) cell per tick
    trace_alive: np.ndarray | None = None           # (n_ticks, n_targets)
    final_particles: list[np.ndarray] | None = None
    final_truths: np.ndarray | None = None

    @property
    def found_count(self) -> int:
        return sum(1 for o in self.outcomes if o.found)

    @property
    def n_targets(self) -> int:
        return len(self.outcomes)

    def first_detection_time(self) -> float | None:
        return self.found_events[0][1] if self.found_events else None

    def summary_dict(self) -> dict:
        return {
            "dt_s": self.dt_s,
            "ticks": self.n_ticks,
            "termination": self.termination,
            "targets": self.n_targets,
            "found": self.found_count,
            "outcomes": [asdict(o) for o in self.outcomes],
            "found_events": [{"target": k, "t_s": t} for k, t in self.found_events],
        }

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary_dict(), fh, indent=2)
            fh.write("\n")

    def write_log(self, path) -> None:
        """Line-delimited per-tick records: tick, time, cell, events."""
        if self.trace_cells is None:
            raise ValueError("run was executed without trace recording")
        events_by_tick: dict[int, list[int]] = {}
        for k, t in self.found_events:
            tick = int(round(t / self.dt_s))
            events_by_tick.setdefault(tick, []).append(k)
        with open(path, "w", encoding="utf-8") as fh:
            for tick in range(1, self.n_ticks + 1):
                rec = {
                    "tick": tick,
                    "t_s": tick * self.dt_s,
                    "cell": [int(self.trace_cells[tick - 1, 0]),
                             int(self.trace_cells[tick - 1, 1])],
                    "alive": [int(a) for a in self.trace_alive[tick - 1]],
                }
                if tick in events_by_tick:
                    rec["found"] = events_by_tick[tick]
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


class Simulation:
    """A single mission, stepped tick by tick."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.world = cfg.world
        self.fields = resolve_fields(cfg)
        validate_config(cfg, self.fields)
        self.dt = cfg.dt_s

        ss = np.random.SeedSequence(cfg.seed)
        kids = ss.spawn(3 + len(cfg.targets))
        self.motion_rng = np.random.default_rng(kids[0])
        truth_rng = np.random.default_rng(kids[1])
        self.resample_rng = np.random.default_rng(kids[2])

        self.ensembles: list[ParticleEnsemble] = []
        for k, tgt in enumerate(cfg.targets):
            rng = np.random.default_rng(kids[3 + k])
            self.ensembles.append(init_ensemble(tgt.center, tgt.particles, tgt.sigma_m,
                                                rng, target_id=k, miss_prob=cfg.miss_prob))
        self.truths: list[TruthTarget] = [
            sample_truth(tgt.center, tgt.sigma_m, truth_rng) for tgt in cfg.targets
        ]

        # One contiguous block for all particles plus the truth targets at the
        # end; ensembles and truths keep views into it so a single drift call
        # advances everything afloat.
        sizes = [e.n_total for e in self.ensembles]
        self._master = np.concatenate(
            [e.positions for e in self.ensembles]
            + [np.stack([t.position for t in self.truths], axis=0)], axis=0)
        ofs = 0
        self._slices = []
        for e, n in zip(self.ensembles, sizes):
            e.positions = self._master[ofs:ofs + n]
            self._slices.append((ofs, ofs + n))
            ofs += n
        self._truth_pos = self._master[ofs:]
        for k, t in enumerate(self.truths):
            t.position = self._truth_pos[k]
        self._drifter = EffectiveDrift(self.fields, cfg.drift.wind_leeway_factor)

        self.found = [False] * len(cfg.targets)
        self.cell = cfg.uav.start_cell
        self.tick = 0
        self.planner = build_planner(cfg.planner, self.world, self.dt)

    # --- observation ---------------------------------------------------------

    def observe_cell(self, cell: tuple[int, int], t: float) -> list[int]:
        """Detect any truth in ``cell``; feed the miss to every remaining belief."""
        detected = []
        for k, truth in enumerate(self.truths):
            if not self.found[k] and self.world.cell_of(truth.position) == cell:
                self.found[k] = True
                truth.mark_found(t)
                detected.append(k)
        for k, ens in enumerate(self.ensembles):
            if not self.found[k]:
                ens.negative_update(cell, self.world)
                if self.cfg.miss_prob > 0.0 and ens.maybe_resample(self.resample_rng):
                    lo, hi = self._slices[k]
                    self._master[lo:hi] = ens.positions
                    ens.positions = self._master[lo:hi]
        return detected

    # --- main loop -------------------------------------------------------------

    def _drift_all(self, t_prev: float) -> None:
        frozen = [k for k, f in enumerate(self.found) if f]
        keep = self._truth_pos[frozen].copy() if frozen else None
        self._master[:] = drift_step(self._master, self._drifter, t_prev,
                                     self.cfg.drift, self.motion_rng)
        if frozen:
            self._truth_pos[frozen] = keep

    def run(self) -> RunRecord:
        cfg = self.cfg
        max_ticks = cfg.max_ticks()
        n_targets = len(cfg.targets)
        record = cfg.record_trace
        trace_cells = np.zeros((max_ticks, 2), dtype=np.int32) if record else None
        trace_alive = np.zeros((max_ticks, n_targets), dtype=np.int32) if record else None
        found_events: list[tuple[int, float]] = []
        termination = "endurance-exhausted"

        for tick in range(1, max_ticks + 1):
            t = tick * self.dt
            self._drift_all(t - self.dt)

            if tick == 1:
                for k in self.observe_cell(self.cell, t):
                    found_events.append((k, t))

            obs = PlannerObservation(
                uav_cell=self.cell, time_s=t,
                ensembles=tuple(self.ensembles), found=tuple(self.found))
            cmd = self.planner.plan(obs)
            ni, nj = cmd.cell
            ci, cj = self.cell
            if abs(ni - ci) + abs(nj - cj) > 1 or not self.world.contains_cell(ni, nj):
                raise PlannerError(f"illegal command {cmd.cell} from {self.cell}")
            moved = cmd.cell != self.cell
            self.cell = cmd.cell

            if moved or tick > 1:
                for k in self.observe_cell(self.cell, t):
                    found_events.append((k, t))

            self.tick = tick
            if record:
                trace_cells[tick - 1] = self.cell
                for k, ens in enumerate(self.ensembles):
                    trace_alive[tick - 1, k] = ens.alive_count

            if all(self.found):
                termination = "all-found"
                break
            if all(self.found[k] or self.ensembles[k].exhausted for k in range(n_targets)):
                termination = "belief-exhausted"
                break

        n_ticks = self.tick
        outcomes = [
            TargetOutcome(found=self.found[k],
                          found_time_s=self.truths[k].found_at,
                          belief_exhausted=self.ensembles[k].exhausted)
            for k in range(n_targets)
        ]
        final_particles = None
        final_truths = None
        if record:
            trace_cells = trace_cells[:n_ticks].copy()
            trace_alive = trace_alive[:n_ticks].copy()
            final_particles = [e.alive_positions().copy() for e in self.ensembles]
            final_truths = self._truth_pos.copy()
        return RunRecord(dt_s=self.dt, n_ticks=n_ticks, outcomes=outcomes,
                         found_events=found_events, termination=termination,
                         trace_cells=trace_cells if record else None,
                         trace_alive=trace_alive if record else None,
                         final_particles=final_particles, final_truths=final_truths)


def run_simulation(cfg: SimConfig) -> RunRecord:
    """Build and run one mission; deterministic in ``cfg``."""
    return Simulation(cfg).run()


# --- config file (JSON) -------------------------------------------------------


def config_to_json(cfg: SimConfig) -> dict:
    if isinstance(cfg.fields, SyntheticFieldSpec):
        fields = {"type": "synthetic", "seed": cfg.fields.seed,
                  "duration_s": cfg.fields.duration_s,
                  "params": asdict(cfg.fields.params)}
    elif isinstance(cfg.fields, str):
        fields = {"type": "file", "path": cfg.fields}
    else:
        raise ConfigError("only synthetic or file field sources serialize to JSON")
    return {
        "seed": cfg.seed,
        "grid": {"origin_m": list(cfg.world.origin), "cell_size_m": cfg.world.cell_size,
                 "nx": cfg.world.nx, "ny": cfg.world.ny},
        "uav": {"speed_ms": cfg.uav.speed_ms, "endurance_s": cfg.uav.endurance_s,
                "start_cell": list(cfg.uav.start_cell)},
        "drift": {"wind_leeway_factor": cfg.drift.wind_leeway_factor,
                  "diffusion_m2_s": cfg.drift.diffusion_m2_s},
        "fields": fields,
        "planner": {"name": cfg.planner.name, "eta": cfg.planner.eta,
                    "budget_min": cfg.planner.bnb_budget_min,
                    "horizon": cfg.planner.bnb_horizon,
                    "beam": cfg.planner.bnb_beam,
                    "vicinity_r": cfg.planner.bnb_vicinity_r,
                    "first_target_only": cfg.planner.first_target_only},
        "targets": [{"center_m": list(t.center), "sigma_m": t.sigma_m,
                     "particles": t.particles} for t in cfg.targets],
        "miss_prob": cfg.miss_prob,
        "record_trace": cfg.record_trace,
    }


def config_from_json(data: dict) -> SimConfig:
    try:
        grid = data["grid"]
        world = GridWorld(origin=tuple(grid.get("origin_m", (0.0, 0.0))),
                          cell_size=float(grid["cell_size_m"]),
                          nx=int(grid["nx"]), ny=int(grid["ny"]))
        uav_d = data["uav"]
        uav = UavSpec(speed_ms=float(uav_d.get("speed_ms", 18.0)),
                      endurance_s=float(uav_d.get("endurance_s", 7200.0)),
                      start_cell=tuple(int(c) for c in uav_d["start_cell"]))
        drift_d = data.get("drift", {})
        drift = DriftParams(
            wind_leeway_factor=float(drift_d.get("wind_leeway_factor", 0.03)),
            diffusion_m2_s=float(drift_d.get("diffusion_m2_s", 1.0)),
            dt_s=world.cell_size / uav.speed_ms)
        f = data["fields"]
        if f["type"] == "synthetic":
            params = FieldGenParams(**f.get("params", {}))
            fields: FieldPair | SyntheticFieldSpec | str = SyntheticFieldSpec(
                seed=int(f["seed"]),
                duration_s=float(f.get("duration_s", uav.endurance_s + 3600.0)),
                params=params)
        elif f["type"] == "file":
            fields = str(f["path"])
        else:
            raise ConfigError(f"unknown field source type {f['type']!r}")
        p = data.get("planner", {})
        planner = PlannerSpec(
            name=p.get("name", "spiral"), eta=float(p.get("eta", 0.75)),
            bnb_budget_min=float(p.get("budget_min", 50.0)),
            bnb_horizon=int(p.get("horizon", 20)),
            bnb_beam=None if p.get("beam") is None else int(p["beam"]),
            bnb_vicinity_r=int(p.get("vicinity_r", 3)),
            first_target_only=bool(p.get("first_target_only", False)))
        targets = [TargetSpec(center=tuple(t["center_m"]),
                              sigma_m=float(t.get("sigma_m", 1000.0)),
                              particles=int(t.get("particles", 10_000)))
                   for t in data["targets"]]
        return SimConfig(world=world, fields=fields, drift=drift, planner=planner,
                         uav=uav, targets=targets,
                         miss_prob=float(data.get("miss_prob", 0.0)),
                         seed=int(data.get("seed", 0)),
                         record_trace=bool(data.get("record_trace", True)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc
