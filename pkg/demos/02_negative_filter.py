"""Negative measurements reshaping a target belief.

A UAV that looks at a cell and sees nothing is still learning something.
This walks a belief cloud through a line of no-detection observations and
shows the erasure (perfect sensor) and reweighting (lossy sensor) paths.
"""

import numpy as np

from sarsim import GridWorld, init_ensemble

world = GridWorld(origin=(0.0, 0.0), cell_size=100.0, nx=100, ny=100)
rng = np.random.default_rng(3)

print("perfect sensor: observed cells are erased from the belief")
ens = init_ensemble(center=(5000.0, 5000.0), n=20_000, sigma=400.0, rng=rng)
print(f"  start: {ens.alive_count} alive, cog = {ens.center_of_gravity().round(1)}")
for j in range(44, 56):
    ens.negative_update((50, j), world)
rect = ens.containment_rect(0.75, world)
print(f"  after sweeping column 50: {ens.alive_count} alive, "
      f"weights sum = {ens.weights.sum():.12f}")
print(f"  cog shifted to {ens.center_of_gravity().round(1)}, "
      f"75% rectangle now {rect.width}x{rect.height} cells")

print()
print("lossy sensor (10% miss chance): weights shrink instead of dying")
lossy = init_ensemble(center=(5000.0, 5000.0), n=20_000, sigma=400.0, rng=rng,
                      miss_prob=0.1)
center_cell = world.cell_of((5000.0, 5000.0))
w_before = lossy.weights.max()
for _ in range(3):
    lossy.negative_update(center_cell, world)
    lossy.maybe_resample(rng)
print(f"  three looks at the densest cell: max weight {w_before:.2e} -> "
      f"{lossy.weights.max():.2e}, alive = {lossy.alive_count}")
print(f"  effective sample size: {lossy.effective_sample_size():.0f} of {lossy.n_total}")
