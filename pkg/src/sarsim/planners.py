"""Grid planners: expanding spiral, boustrophedon rectangles, branch and bound.

All planners share one contract: each tick they receive the world state
visible to the UAV (its cell, the per-target belief clouds, which targets
are already found) and answer with a single legal move, either to a
4-neighbor cell or staying put. They are deterministic state machines; any
two runs that feed a planner the same observation stream get the same
command stream back.

Multi-target missions visit targets in the order that minimizes the total
straight-line tour from the UAV through all cloud centers, found by brute
force over permutations (real missions have very few targets).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .belief import ParticleEnsemble, Rect, containment_rect_from_grid
from .environment import ConfigError, GridWorld

# Move priority used for every tie-break: East, North, West, South.
MOVES = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class PlannerObservation:
    """What the planner sees at one tick. Ensembles are read-only views."""

    uav_cell: tuple[int, int]
    time_s: float
    ensembles: tuple[ParticleEnsemble, ...]
    found: tuple[bool, ...]


@dataclass(frozen=True)
class PlannerCommand:
    """Next cell to fly to: a 4-neighbor of the current cell, or it for hold."""

    cell: tuple[int, int]


@dataclass(frozen=True)
class PlannerSpec:
    """Planner selection plus the knobs exposed through config files."""

    name: str = "spiral"
    eta: float = 0.75
    bnb_budget_min: float = 50.0
    bnb_horizon: int = 20
    bnb_beam: int | None = 512
    bnb_vicinity_r: int = 3
    first_target_only: bool = False

    def __post_init__(self):
        if self.name not in ("spiral", "boustrophedon", "bnb"):
            raise ConfigError(f"unknown planner {self.name!r}")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError(f"eta must be in (0, 1), got {self.eta}")
        if self.bnb_budget_min <= 0 or self.bnb_horizon <= 0 or self.bnb_vicinity_r <= 0:
            raise ConfigError("bnb budget, horizon, and vicinity radius must be positive")
        if self.bnb_beam is not None and self.bnb_beam <= 0:
            raise ConfigError("bnb beam must be positive or None for unlimited")


def order_targets(uav_pos, centers) -> list[int]:
    """Permutation of ``centers`` minimizing the open tour uav -> c1 -> ... -> cn.

    Brute force over all orders; ties go to the lexicographically smallest
    permutation. Refuses more than 8 targets.
    """
    n = len(centers)
    if n > 8:
        raise ConfigError(f"brute-force ordering capped at 8 targets, got {n}")
    if n == 0:
        return []
    pts = [(float(c[0]), float(c[1])) for c in centers]
    ux, uy = float(uav_pos[0]), float(uav_pos[1])
    best_len = math.inf
    best = None
    for perm in itertools.permutations(range(n)):
        total = 0.0
        px, py = ux, uy
        for k in perm:
            total += math.hypot(pts[k][0] - px, pts[k][1] - py)
            px, py = pts[k]
        if total < best_len:
            best_len = total
            best = perm
    return list(best)


def transit_step(cur: tuple[int, int], goal: tuple[int, int]) -> tuple[int, int]:
    """One cell along the discretized line toward ``goal``.

    Picks the move that most reduces the Euclidean distance to the goal,
    ties resolved by the E, N, W, S priority.
    """
    di = goal[0] - cur[0]
    dj = goal[1] - cur[1]
    if di == 0 and dj == 0:
        return cur
    best = None
    for mi, mj in MOVES:
        rem = math.hypot(di - mi, dj - mj)
        if rem >= math.hypot(di, dj):
            continue
        if best is None or rem < best[0]:
            best = (rem, (cur[0] + mi, cur[1] + mj))
    return best[1]


def spiral_offsets():
    """Relative cells of the outward square spiral, anchor excluded.

    Leg lengths run 1, 1, 2, 2, 3, 3, ... cycling through E, N, W, S, so the
    first moves are E, N, W, W, S, S and ring k is complete after
    (2k+1)^2 - 1 cells.
    """
    di = dj = 0
    run = 1
    d = 0
    while True:
        mi, mj = MOVES[d % 4]
        for _ in range(run):
            di += mi
            dj += mj
            yield (di, dj)
        d += 1
        if d % 2 == 0:
            run += 1


def serpentine_cells(rect: Rect, corner: tuple[int, int]) -> list[tuple[int, int]]:
    """Lawnmower coverage of ``rect`` starting at one of its corners.

    Rows are traversed fully along the x axis, shifting one row in y and
    reversing direction, so the path visits every cell exactly once in
    area - 1 moves.
    """
    ci, cj = corner
    if ci not in (rect.i_min, rect.i_max) or cj not in (rect.j_min, rect.j_max):
        raise ValueError(f"{corner} is not a corner of {rect}")
    xdir = 1 if ci == rect.i_min else -1
    ydir = 1 if cj == rect.j_min else -1
    rows = range(rect.j_min, rect.j_max + 1) if ydir > 0 else range(rect.j_max, rect.j_min - 1, -1)
    cells = []
    for row_idx, j in enumerate(rows):
        forward = (row_idx % 2 == 0)
        if (xdir > 0) == forward:
            xs = range(rect.i_min, rect.i_max + 1)
        else:
            xs = range(rect.i_max, rect.i_min - 1, -1)
        cells.extend((i, j) for i in xs)
    return cells


class _QueuedPlanner:
    """Shared target-queue machinery: order once, pursue, skip resolved targets."""

    def __init__(self, world: GridWorld, eta: float = 0.75):
        self.world = world
        self.eta = eta
        self._order: list[int] | None = None
        self._qpos = 0
        self._current: int | None = None

    def _resolved(self, obs: PlannerObservation, k: int) -> bool:
        return obs.found[k] or obs.ensembles[k].exhausted

    def _skippable(self, obs: PlannerObservation, k: int) -> bool:
        return self._resolved(obs, k)

    def _current_target(self, obs: PlannerObservation) -> int | None:
        if self._order is None:
            live = [k for k in range(len(obs.ensembles)) if not self._resolved(obs, k)]
            centers = [obs.ensembles[k].center_of_gravity() for k in live]
            uav_xy = self.world.cell_center(*obs.uav_cell)
            self._order = [live[p] for p in order_targets(uav_xy, centers)]
        while self._qpos < len(self._order) and self._skippable(obs, self._order[self._qpos]):
            self._qpos += 1
        k = self._order[self._qpos] if self._qpos < len(self._order) else None
        if k != self._current:
            self._current = k
            if k is not None:
                self._on_new_target(k)
        return k

    def _on_new_target(self, k: int) -> None:
        pass

    def _hold(self, obs: PlannerObservation) -> PlannerCommand:
        return PlannerCommand(obs.uav_cell)


class SpiralPlanner(_QueuedPlanner):
    """Fly to the cloud's center of gravity, then search in an expanding square spiral."""

    def __init__(self, world: GridWorld, eta: float = 0.75):
        super().__init__(world, eta)
        self._searching = False
        self._offsets = None
        self._anchor: tuple[int, int] | None = None
        self._pending: tuple[int, int] | None = None
        self._consumed = 0

    def _on_new_target(self, k: int) -> None:
        self._searching = False
        self._offsets = None
        self._anchor = None
        self._pending = None
        self._consumed = 0

    def plan(self, obs: PlannerObservation) -> PlannerCommand:
        k = self._current_target(obs)
        if k is None:
            return self._hold(obs)
        if not self._searching:
            cog = obs.ensembles[k].center_of_gravity()
            goal = self.world.cells_of(cog[None, :], clip=True)[0]
            goal = (int(goal[0]), int(goal[1]))
            if obs.uav_cell != goal:
                return PlannerCommand(transit_step(obs.uav_cell, goal))
            self._searching = True
            self._anchor = obs.uav_cell
            self._offsets = spiral_offsets()
            self._pending = None
        if self._pending is None or obs.uav_cell == self._pending:
            self._pending = self._next_spiral_cell()
            if self._pending is None:
                return self._hold(obs)
        return PlannerCommand(transit_step(obs.uav_cell, self._pending))

    def _next_spiral_cell(self) -> tuple[int, int] | None:
        limit = (2 * max(self.world.nx, self.world.ny) + 1) ** 2
        ai, aj = self._anchor
        for di, dj in self._offsets:
            self._consumed += 1
            if self._consumed > limit:
                return None
            cell = (ai + di, aj + dj)
            if self.world.contains_cell(*cell):
                return cell
        return None


class BoustrophedonPlanner(_QueuedPlanner):
    """Sweep a per-target containment rectangle back and forth, row by row.

    Transit aims at the nearest cell of the (live) containment rectangle; the
    rectangle is frozen the moment the sweep begins, and the planner then
    mows that fixed pattern corner to corner, reversing into another sweep of
    the same ground when it finishes empty-handed, until the target is found
    or its belief dies. The fixed pattern is deliberate: the pattern keeps
    turning at its own edges while the cloud drifts, so the planner catches
    drifting targets through persistence rather than pursuit.
    """

    def __init__(self, world: GridWorld, eta: float = 0.75):
        super().__init__(world, eta)
        self._rect: Rect | None = None
        self._waypoints: list[tuple[int, int]] = []
        self._wpos = 0

    def _on_new_target(self, k: int) -> None:
        self._rect = None
        self._waypoints = []
        self._wpos = 0

    def plan(self, obs: PlannerObservation) -> PlannerCommand:
        k = self._current_target(obs)
        if k is None:
            return self._hold(obs)
        if self._rect is None:
            live = obs.ensembles[k].containment_rect(self.eta, self.world)
            if not live.contains(*obs.uav_cell):
                goal = live.nearest_cell(*obs.uav_cell)
                return PlannerCommand(transit_step(obs.uav_cell, goal))
            self._rect = live
            self._plan_sweep(obs.uav_cell)
        while self._wpos < len(self._waypoints) and obs.uav_cell == self._waypoints[self._wpos]:
            self._wpos += 1
        if self._wpos >= len(self._waypoints):
            # Sweep finished without a detection: mow the same pattern again.
            self._plan_sweep(obs.uav_cell)
            while self._wpos < len(self._waypoints) and obs.uav_cell == self._waypoints[self._wpos]:
                self._wpos += 1
            if self._wpos >= len(self._waypoints):
                return self._hold(obs)
        return PlannerCommand(transit_step(obs.uav_cell, self._waypoints[self._wpos]))

    def _plan_sweep(self, entry: tuple[int, int]) -> None:
        rect = self._rect
        corner = min(rect.corners(),
                     key=lambda c: (abs(c[0] - entry[0]) + abs(c[1] - entry[1]), c))
        path_to_corner = []
        cur = entry
        while cur != corner:
            cur = transit_step(cur, corner)
            path_to_corner.append(cur)
        sweep = serpentine_cells(rect, corner)
        self._waypoints = path_to_corner + sweep[1:] if path_to_corner else sweep[1:]
        if not self._waypoints:
            self._waypoints = [corner]
        self._wpos = 0


# --- branch and bound ---------------------------------------------------------


@dataclass(frozen=True)
class BnBConfig:
    """Branch-and-bound knobs.

    budget_s caps the time spent searching (not transiting) per target.
    horizon is the lookahead depth in cells, beam the frontier cap (None for
    unlimited), vicinity_r the minimum radius of the mass window feeding the
    optimistic bound, margin the ring of cells around the containment
    rectangle the UAV may also use.
    """

    budget_s: float = 50.0 * 60.0
    horizon: int = 20
    beam: int | None = 512
    vicinity_r: int = 3
    margin: int = 1

    def __post_init__(self):
        if self.budget_s <= 0 or self.horizon <= 0 or self.vicinity_r <= 0:
            raise ConfigError("budget_s, horizon, and vicinity_r must be positive")
        if self.beam is not None and self.beam <= 0:
            raise ConfigError("beam must be positive or None")
        if self.margin < 0:
            raise ConfigError("margin must be nonnegative")


@dataclass(frozen=True)
class BnBResult:
    value: float
    path: list[tuple[int, int]]

    @property
    def first_move(self) -> tuple[int, int] | None:
        if len(self.path) < 2:
            return None
        return self.path[1]


def _window_sums(integ: np.ndarray, ci, cj, radius: int, shape) -> np.ndarray:
    ilo = np.maximum(ci - radius, 0)
    ihi = np.minimum(ci + radius, shape[0] - 1)
    jlo = np.maximum(cj - radius, 0)
    jhi = np.minimum(cj + radius, shape[1] - 1)
    return (integ[ihi + 1, jhi + 1] - integ[ilo, jhi + 1]
            - integ[ihi + 1, jlo] + integ[ilo, jlo])


def bnb_search(weights: np.ndarray, start: tuple[int, int], horizon: int,
               beam: int | None = None, vicinity_r: int = 3) -> BnBResult:
    """Depth-limited branch and bound for the most belief mass collectible.

    Nodes are move sequences from ``start`` staying inside the weight array;
    a cell's weight is collected once, on first visit (the start cell counts).
    Each node is scored optimistically with its collected mass plus an upper
    bound on what the remaining moves could still gather: the lesser of the
    mass within the surrounding Chebyshev window (the still-reachable radius,
    never narrower than ``vicinity_r``) and the sum of the top remaining-depth
    weights overall. Nodes whose bound cannot beat the incumbent are pruned
    and the frontier is capped at ``beam`` nodes (highest bounds kept). Ties
    between equal-value plans fall to expansion order, i.e. E, N, W, S move
    priority along the sequence.
    """
    weights = np.asarray(weights, dtype=np.float64)
    nx, ny = weights.shape
    if not (0 <= start[0] < nx and 0 <= start[1] < ny):
        raise ValueError(f"start {start} outside weight array {weights.shape}")
    flat_w = weights.ravel()
    start_flat = start[0] * ny + start[1]

    integ = np.zeros((nx + 1, ny + 1))
    np.cumsum(weights, axis=0, out=integ[1:, 1:])
    np.cumsum(integ[1:, 1:], axis=1, out=integ[1:, 1:])
    top_prefix = np.concatenate(([0.0], np.cumsum(np.sort(flat_w)[::-1])))

    moves_i = np.array([m[0] for m in MOVES])
    moves_j = np.array([m[1] for m in MOVES])

    pos = np.array([start_flat], dtype=np.int64)
    gval = np.array([flat_w[start_flat]])
    visited = np.full((1, horizon + 1), -1, dtype=np.int64)
    visited[0, 0] = start_flat

    best_g = float(gval[0])
    best_path = [start]

    for depth in range(horizon):
        if len(pos) == 0:
            break
        ci = pos // ny
        cj = pos % ny
        child_i = ci[:, None] + moves_i[None, :]
        child_j = cj[:, None] + moves_j[None, :]
        legal = (child_i >= 0) & (child_i < nx) & (child_j >= 0) & (child_j < ny)
        child = np.where(legal, child_i * ny + child_j, 0)
        fresh = ~(child[:, :, None] == visited[:, None, :depth + 1]).any(axis=2)
        g_child = gval[:, None] + flat_w[child] * (fresh & legal)

        remaining = horizon - depth - 1
        if remaining > 0:
            radius = max(remaining, vicinity_r)
            window = _window_sums(integ, child_i.clip(0, nx - 1), child_j.clip(0, ny - 1),
                                  radius, weights.shape)
            h = np.minimum(window, top_prefix[min(remaining, len(flat_w))])
        else:
            h = np.zeros_like(g_child)
        bound = g_child + h

        parent_idx, move_idx = np.nonzero(legal)
        cg = g_child[parent_idx, move_idx]
        cb = bound[parent_idx, move_idx]
        cpos = child[parent_idx, move_idx]

        # Incumbent update: best collected mass; on ties the earliest child in
        # expansion order wins (np.nonzero yields E, N, W, S within each
        # parent), keeping the fixed move priority.
        if len(cg):
            cand = int(np.argmax(cg))
            if cg[cand] > best_g + 1e-15:
                best_g = float(cg[cand])
                row = visited[parent_idx[cand], :depth + 1]
                cells = list(row) + [cpos[cand]]
                best_path = [(int(c) // ny, int(c) % ny) for c in cells]

        keep = cb > best_g + 1e-15
        if not keep.any():
            break
        parent_idx = parent_idx[keep]
        move_idx = move_idx[keep]
        cg = cg[keep]
        cb = cb[keep]
        cpos = cpos[keep]

        if beam is not None and len(cg) > beam:
            sel = np.lexsort((np.arange(len(cb)), -cb))[:beam]
            sel.sort()
            parent_idx = parent_idx[sel]
            move_idx = move_idx[sel]
            cg = cg[sel]
            cb = cb[sel]
            cpos = cpos[sel]

        visited = visited[parent_idx]
        visited[:, depth + 1] = cpos
        pos = cpos
        gval = cg

    return BnBResult(value=best_g, path=best_path)


def exact_oracle(weights: np.ndarray, start: tuple[int, int], horizon: int) -> BnBResult:
    """Exhaustive optimum of the same collection problem, for small instances only.

    Enumerates every move sequence up to ``horizon`` (weights collected once
    per cell), so it refuses anything beyond a 64-cell area or depth 12.
    """
    weights = np.asarray(weights, dtype=np.float64)
    nx, ny = weights.shape
    if nx * ny > 64:
        raise ValueError(f"oracle limited to 64 cells, got {nx * ny}")
    if horizon > 12:
        raise ValueError(f"oracle limited to horizon 12, got {horizon}")
    if not (0 <= start[0] < nx and 0 <= start[1] < ny):
        raise ValueError(f"start {start} outside weight array {weights.shape}")

    flat_w = [float(w) for w in weights.ravel()]
    total = sum(flat_w)
    start_flat = start[0] * ny + start[1]
    neighbors: list[list[int]] = []
    for i in range(nx):
        for j in range(ny):
            cell_neighbors = []
            for mi, mj in MOVES:
                a, b = i + mi, j + mj
                if 0 <= a < nx and 0 <= b < ny:
                    cell_neighbors.append(a * ny + b)
            neighbors.append(cell_neighbors)

    best = {"g": flat_w[start_flat], "path": [start_flat]}
    path = [start_flat]
    w_max = max(flat_w) if flat_w else 0.0

    def dfs(cell: int, mask: int, g: float, depth: int):
        if g > best["g"] + 1e-15:
            best["g"] = g
            best["path"] = list(path)
        rem = horizon - depth
        if rem == 0:
            return
        # g is exactly the mass collected so far, so total - g is all that is
        # left anywhere; w_max * rem caps what rem more moves could add.
        if g + min(total - g, w_max * rem) <= best["g"] + 1e-15:
            return
        for nxt in neighbors[cell]:
            bit = 1 << nxt
            gain = flat_w[nxt] if not mask & bit else 0.0
            path.append(nxt)
            dfs(nxt, mask | bit, g + gain, depth + 1)
            path.pop()

    dfs(start_flat, 1 << start_flat, flat_w[start_flat], 0)
    return BnBResult(value=best["g"],
                     path=[(c // ny, c % ny) for c in best["path"]])


class BnBPlanner(_QueuedPlanner):
    """Two-tier planner: transit to each containment rectangle, then run the
    depth-limited branch and bound inside it, replanning every tick.

    All rectangles are refreshed each tick so they follow the drifting
    clouds. The per-target budget clock counts only in-rectangle search time;
    when it runs out the target is abandoned and the queue moves on.
    """

    def __init__(self, world: GridWorld, eta: float, cfg: BnBConfig, dt_s: float):
        super().__init__(world, eta)
        self.cfg = cfg
        self.dt_s = dt_s
        self._search_ticks: dict[int, int] = {}
        self._abandoned: set[int] = set()
        self._rects: dict[int, Rect] = {}

    def _skippable(self, obs: PlannerObservation, k: int) -> bool:
        return self._resolved(obs, k) or k in self._abandoned

    def plan(self, obs: PlannerObservation) -> PlannerCommand:
        grids: dict[int, tuple[Rect, np.ndarray]] = {}
        self._rects = {}
        for k, ens in enumerate(obs.ensembles):
            if obs.found[k] or ens.exhausted:
                continue
            bbox, grid = ens.cell_weight_grid(self.world)
            grids[k] = (bbox, grid)
            self._rects[k] = containment_rect_from_grid(bbox, grid, self.eta)

        while True:
            k = self._current_target(obs)
            if k is None:
                return self._hold(obs)
            rect = self._rects[k]
            if not rect.contains(*obs.uav_cell):
                goal = rect.nearest_cell(*obs.uav_cell)
                return PlannerCommand(transit_step(obs.uav_cell, goal))
            ticks = self._search_ticks.get(k, 0) + 1
            if ticks * self.dt_s > self.cfg.budget_s:
                self._abandoned.add(k)
                continue
            self._search_ticks[k] = ticks
            return self._search_move(obs, k, rect, grids[k])

    def _search_move(self, obs, k: int, rect: Rect,
                     bbox_grid: tuple[Rect, np.ndarray]) -> PlannerCommand:
        box = rect.expanded(self.cfg.margin, self.world)
        weights = _paste_weights(box, *bbox_grid)
        start = (obs.uav_cell[0] - box.i_min, obs.uav_cell[1] - box.j_min)
        result = bnb_search(weights, start, self.cfg.horizon, self.cfg.beam,
                            self.cfg.vicinity_r)
        move = result.first_move
        if move is not None:
            return PlannerCommand((box.i_min + move[0], box.j_min + move[1]))
        # Nothing collectible in reach: fall back to the first legal move.
        for mi, mj in MOVES:
            cell = (obs.uav_cell[0] + mi, obs.uav_cell[1] + mj)
            if box.contains(*cell):
                return PlannerCommand(cell)
        return self._hold(obs)


def _paste_weights(box: Rect, bbox: Rect, grid: np.ndarray) -> np.ndarray:
    """Weights of ``grid`` (covering bbox) copied into a box-shaped array."""
    out = np.zeros((box.width, box.height))
    ilo = max(box.i_min, bbox.i_min)
    ihi = min(box.i_max, bbox.i_max)
    jlo = max(box.j_min, bbox.j_min)
    jhi = min(box.j_max, bbox.j_max)
    if ilo <= ihi and jlo <= jhi:
        out[ilo - box.i_min:ihi - box.i_min + 1, jlo - box.j_min:jhi - box.j_min + 1] = \
            grid[ilo - bbox.i_min:ihi - bbox.i_min + 1, jlo - bbox.j_min:jhi - bbox.j_min + 1]
    return out


class FirstTargetOnlyPlanner:
    """Wrapper that freezes the UAV after the first detection (baseline probe)."""

    def __init__(self, inner):
        self.inner = inner

    def plan(self, obs: PlannerObservation) -> PlannerCommand:
        if any(obs.found):
            return PlannerCommand(obs.uav_cell)
        return self.inner.plan(obs)


def build_planner(spec: PlannerSpec, world: GridWorld, dt_s: float):
    """Instantiate the planner described by ``spec`` for one simulation."""
    if spec.name == "spiral":
        planner = SpiralPlanner(world, spec.eta)
    elif spec.name == "boustrophedon":
        planner = BoustrophedonPlanner(world, spec.eta)
    else:
        cfg = BnBConfig(budget_s=spec.bnb_budget_min * 60.0, horizon=spec.bnb_horizon,
                        beam=spec.bnb_beam, vicinity_r=spec.bnb_vicinity_r)
        planner = BnBPlanner(world, spec.eta, cfg, dt_s)
    if spec.first_target_only:
        planner = FirstTargetOnlyPlanner(planner)
    return planner
