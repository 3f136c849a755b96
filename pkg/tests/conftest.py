import numpy as np
import pytest

from sarsim.drift import DriftParams
from sarsim.engine import SimConfig, SyntheticFieldSpec, TargetSpec, UavSpec
from sarsim.environment import FieldGenParams, GridWorld
from sarsim.planners import PlannerSpec

STILL_PARAMS = FieldGenParams(n_gyres=0, background_ms=(0.0, 0.0),
                              wind_mean_ms=(0.0, 0.0), wind_noise_ms=0.0)


def still_field_spec(duration_s=36_000.0, seed=0):
    """Synthetic field source with zero current and zero wind."""
    return SyntheticFieldSpec(seed=seed, duration_s=duration_s, params=STILL_PARAMS)


def make_config(world=None, planner=None, targets=None, start_cell=(10, 10),
                endurance_s=3600.0, speed_ms=18.0, diffusion=0.0, leeway=0.03,
                field_spec=None, seed=1, miss_prob=0.0, record_trace=True):
    world = world or GridWorld((0.0, 0.0), 100.0, 200, 200)
    dt = world.cell_size / speed_ms
    return SimConfig(
        world=world,
        fields=field_spec or still_field_spec(duration_s=endurance_s + 3600.0),
        drift=DriftParams(wind_leeway_factor=leeway, diffusion_m2_s=diffusion, dt_s=dt),
        planner=planner or PlannerSpec(name="spiral"),
        uav=UavSpec(speed_ms=speed_ms, endurance_s=endurance_s, start_cell=start_cell),
        targets=targets or [TargetSpec(center=(5000.0, 5000.0), sigma_m=400.0,
                                       particles=500)],
        miss_prob=miss_prob,
        seed=seed,
        record_trace=record_trace,
    )
