"""Per-target particle belief with negative-measurement updates.

The belief over one target's location is a weighted particle cloud.
Observing a grid cell and seeing nothing multiplies in-cell weights by the
sensor miss probability and out-of-cell weights by its complement, then
renormalizes; with a perfect sensor (miss probability 0) the in-cell
particles are simply erased. Planners consume two summaries of the cloud:
its center of gravity and the smallest symmetric-quantile rectangle holding
a requested fraction of the belief mass.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .environment import ConfigError, GridWorld


class BeliefExhausted(RuntimeError):
    """Every particle of the ensemble is dead; the target is effectively lost."""


@dataclass(frozen=True)
class Particle:
    position: tuple[float, float]
    weight: float
    alive: bool


@dataclass(frozen=True)
class Rect:
    """Inclusive axis-aligned rectangle in cell space."""

    i_min: int
    i_max: int
    j_min: int
    j_max: int

    def __post_init__(self):
        if self.i_min > self.i_max or self.j_min > self.j_max:
            raise ValueError(f"degenerate rect {self}")

    @property
    def width(self) -> int:
        return self.i_max - self.i_min + 1

    @property
    def height(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, i: int, j: int) -> bool:
        return self.i_min <= i <= self.i_max and self.j_min <= j <= self.j_max

    def nearest_cell(self, i: int, j: int) -> tuple[int, int]:
        return (min(max(i, self.i_min), self.i_max), min(max(j, self.j_min), self.j_max))

    def corners(self) -> list[tuple[int, int]]:
        return [(self.i_min, self.j_min), (self.i_max, self.j_min),
                (self.i_min, self.j_max), (self.i_max, self.j_max)]

    def expanded(self, margin: int, world: GridWorld) -> "Rect":
        return Rect(max(self.i_min - margin, 0), min(self.i_max + margin, world.nx - 1),
                    max(self.j_min - margin, 0), min(self.j_max + margin, world.ny - 1))


class ParticleEnsemble:
    """Weighted particle cloud for one search target.

    Positions are an (N, 2) float array; weights always sum to 1 over alive
    particles (up to float error) unless the belief is exhausted. N is fixed
    at creation; erasure only flips the alive mask.
    """

    def __init__(self, target_id: int, positions: np.ndarray, miss_prob: float = 0.0,
                 weights: np.ndarray | None = None, alive: np.ndarray | None = None):
        if not 0.0 <= miss_prob < 1.0:
            raise ConfigError(f"miss probability must be in [0, 1), got {miss_prob}")
        self.target_id = target_id
        self.miss_prob = float(miss_prob)
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        n = len(self.positions)
        if n < 1:
            raise ConfigError("ensemble needs at least one particle")
        self.weights = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64).copy()
        self.alive = np.ones(n, dtype=bool) if alive is None else np.asarray(alive, dtype=bool).copy()
        if (self.weights < 0).any():
            raise ConfigError("weights must be nonnegative")
        self._alive_count = int(self.alive.sum())

    @property
    def n_total(self) -> int:
        return len(self.positions)

    @property
    def alive_count(self) -> int:
        return self._alive_count

    @property
    def exhausted(self) -> bool:
        return self._alive_count == 0

    def particles(self):
        """Iterate particle views (handy for inspection, not the hot path)."""
        for k in range(self.n_total):
            yield Particle((self.positions[k, 0], self.positions[k, 1]),
                           float(self.weights[k]), bool(self.alive[k]))

    def alive_positions(self) -> np.ndarray:
        """Positions of alive particles; a read-only view when none have died."""
        if self._alive_count == self.n_total:
            return self.positions
        return self.positions[self.alive]

    def alive_weights(self) -> np.ndarray:
        if self._alive_count == self.n_total:
            return self.weights
        return self.weights[self.alive]

    # --- measurement update --------------------------------------------------

    def negative_update(self, cell: tuple[int, int], world: GridWorld) -> bool:
        """Apply a no-detection observation of ``cell``.

        In-cell alive weights scale by the miss probability, out-of-cell by
        its complement, then everything renormalizes. A miss probability of
        zero erases in-cell particles outright. Returns True while the belief
        still has alive mass, False once it is exhausted.
        """
        if self.exhausted:
            return False
        ox, oy = world.origin
        cs = world.cell_size
        x = self.positions[:, 0]
        y = self.positions[:, 1]
        x0 = ox + cell[0] * cs
        y0 = oy + cell[1] * cs
        in_cell = (x >= x0) & (x < x0 + cs) & (y >= y0) & (y < y0 + cs) & self.alive

        if self.miss_prob == 0.0:
            hits = int(in_cell.sum())
            if hits:
                self.alive[in_cell] = False
                self.weights[in_cell] = 0.0
                self._alive_count -= hits
                total = self.weights.sum()
                if total <= 0.0:
                    self._alive_count = 0
                    return False
                self.weights /= total
            return True

        self.weights[in_cell] *= self.miss_prob
        out_cell = self.alive & ~in_cell
        self.weights[out_cell] *= 1.0 - self.miss_prob
        total = self.weights[self.alive].sum()
        if total <= 0.0:
            self.alive[:] = False
            self._alive_count = 0
            return False
        self.weights /= total
        return True

    def effective_sample_size(self) -> float:
        w = self.weights[self.alive]
        denom = float((w * w).sum())
        return 1.0 / denom if denom > 0 else 0.0

    def maybe_resample(self, rng: np.random.Generator) -> bool:
        """Systematic resampling back to N equal weights when ESS < N/2.

        Returns True when a resample happened. Meant for the nonzero
        miss-probability path; with erasure the weights stay uniform and this
        never triggers.
        """
        if self.exhausted:
            return False
        if self.effective_sample_size() >= self.n_total / 2.0:
            return False
        n = self.n_total
        w = np.where(self.alive, self.weights, 0.0)
        cum = np.cumsum(w)
        cum /= cum[-1]
        u = (rng.random() + np.arange(n)) / n
        idx = np.searchsorted(cum, u, side="left")
        self.positions = np.ascontiguousarray(self.positions[idx])
        self.weights = np.full(n, 1.0 / n)
        self.alive = np.ones(n, dtype=bool)
        self._alive_count = n
        return True

    # --- planner-facing summaries ---------------------------------------------

    def center_of_gravity(self) -> np.ndarray:
        """Weight-weighted mean position of the alive particles."""
        if self.exhausted:
            raise BeliefExhausted(f"target {self.target_id}: no alive particles")
        w = self.weights[self.alive]
        p = self.positions[self.alive]
        return (p * w[:, None]).sum(axis=0) / w.sum()

    def cell_weight_grid(self, world: GridWorld) -> tuple[Rect, np.ndarray]:
        """Alive weight binned onto grid cells over the cloud's bounding box.

        Returns (bounding rect, (width, height) weight array). Particles
        outside the grid are clamped into the border cells. Dead particles
        carry zero weight, so they only pad the box, never the histogram.
        """
        if self.exhausted:
            raise BeliefExhausted(f"target {self.target_id}: no alive particles")
        ij = world.cells_of(self.positions, clip=True)
        i_min = int(ij[:, 0].min())
        i_max = int(ij[:, 0].max())
        j_min = int(ij[:, 1].min())
        j_max = int(ij[:, 1].max())
        height = j_max - j_min + 1
        flat = ij[:, 0] - i_min
        flat *= height
        flat += ij[:, 1] - j_min
        grid = np.bincount(flat, weights=self.weights,
                           minlength=(i_max - i_min + 1) * height)
        return Rect(i_min, i_max, j_min, j_max), grid.reshape(i_max - i_min + 1, height)

    def containment_rect(self, eta: float, world: GridWorld) -> Rect:
        """Smallest symmetric-quantile cell rectangle holding at least ``eta`` of the belief."""
        bbox, grid = self.cell_weight_grid(world)
        return containment_rect_from_grid(bbox, grid, eta)


def containment_rect_from_grid(bbox: Rect, grid: np.ndarray, eta: float) -> Rect:
    """Containment rectangle computed from a precomputed cell weight grid.

    Binary-searches the per-axis trim level s: the candidate rectangle spans
    the [(1-s)/2, (1+s)/2] quantiles of the alive particles' cell coordinates
    on each axis independently, and the smallest s whose rectangle captures
    eta of the alive weight wins. Deterministic; always sound (the result
    holds at least eta of the mass).
    """
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta must be in (0, 1), got {eta}")
    total = float(grid.sum())
    target = eta * total * (1.0 - 1e-12)

    cum_x = np.cumsum(grid.sum(axis=1)).tolist()
    cum_y = np.cumsum(grid.sum(axis=0)).tolist()
    # Integral image: candidate rectangle mass in O(1).
    integ = np.zeros((grid.shape[0] + 1, grid.shape[1] + 1))
    np.cumsum(grid, axis=0, out=integ[1:, 1:])
    np.cumsum(integ[1:, 1:], axis=1, out=integ[1:, 1:])
    flat = integ.ravel()
    ncol = integ.shape[1]

    imax, jmax = grid.shape[0] - 1, grid.shape[1] - 1
    scale = total * (1.0 - 1e-12)

    def block(ilo, ihi, jlo, jhi):
        top = (ihi + 1) * ncol
        bot = ilo * ncol
        return flat[top + jhi + 1] - flat[bot + jhi + 1] - flat[top + jlo] + flat[bot + jlo]

    def rect_at(s):
        q_lo = (1.0 - s) / 2.0 * scale
        q_hi = (1.0 + s) / 2.0 * scale
        return (bisect_left(cum_x, q_lo), min(bisect_left(cum_x, q_hi), imax),
                bisect_left(cum_y, q_lo), min(bisect_left(cum_y, q_hi), jmax))

    lo, hi = 0.0, 1.0
    for _ in range(35):
        mid = 0.5 * (lo + hi)
        ilo, ihi, jlo, jhi = rect_at(mid)
        if block(ilo, ihi, jlo, jhi) >= target:
            hi = mid
        else:
            lo = mid
    ilo, ihi, jlo, jhi = rect_at(hi)
    # Guard against landing a hair below eta from float truncation.
    while block(ilo, ihi, jlo, jhi) < target and (ilo > 0 or ihi < imax
                                                  or jlo > 0 or jhi < jmax):
        ilo = max(ilo - 1, 0)
        ihi = min(ihi + 1, imax)
        jlo = max(jlo - 1, 0)
        jhi = min(jhi + 1, jmax)
    return Rect(bbox.i_min + ilo, bbox.i_min + ihi, bbox.j_min + jlo, bbox.j_min + jhi)
