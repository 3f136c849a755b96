"""Planar world frame, search grid, and time-varying velocity fields.

The simulation runs in a local tangent plane measured in meters. Two
coordinate systems coexist:

* the fine search grid (``GridWorld``), whose cells are what the UAV
  observes, typically 100 m squares;
* the coarse field grid (``VectorField``), on which current and wind
  velocities are stored, typically kilometers between nodes and an hour
  between frames, mirroring the resolution of operational data providers.

Fields are immutable after construction and safe to share between
concurrently running simulations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

FIELD_FILE_MAGIC = b"SARFIELD"
FIELD_FILE_VERSION = 1


class ConfigError(ValueError):
    """Raised for invalid configuration values (bad magnitudes, mismatched extents)."""


class FieldFileError(ValueError):
    """Raised when a field file cannot be parsed; message carries a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class GridWorld:
    """Discrete search grid over a rectangle of the plane.

    Cell (i, j) covers [origin_x + i*cs, origin_x + (i+1)*cs) x
    [origin_y + j*cs, origin_y + (j+1)*cs); the upper/right boundary of a
    cell belongs to the next cell (floor convention).
    """

    origin: tuple[float, float]
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ConfigError(f"cell_size must be positive, got {self.cell_size}")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError(f"grid needs at least one cell per axis, got {self.nx}x{self.ny}")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) covered by the grid."""
        ox, oy = self.origin
        return (ox, oy, ox + self.nx * self.cell_size, oy + self.ny * self.cell_size)

    def cell_of(self, p) -> tuple[int, int] | None:
        """Cell index containing point ``p``, or None when outside the grid."""
        i = math.floor((p[0] - self.origin[0]) / self.cell_size)
        j = math.floor((p[1] - self.origin[1]) / self.cell_size)
        if 0 <= i < self.nx and 0 <= j < self.ny:
            return (i, j)
        return None

    def cells_of(self, xy: np.ndarray, clip: bool = False) -> np.ndarray:
        """Vectorized cell indices for an (M, 2) array of points.

        With ``clip=True`` out-of-grid points are clamped to the border cells,
        otherwise their indices fall outside [0, nx) x [0, ny).
        """
        ij = np.floor((xy - np.asarray(self.origin)) / self.cell_size).astype(np.int64)
        if clip:
            np.clip(ij[:, 0], 0, self.nx - 1, out=ij[:, 0])
            np.clip(ij[:, 1], 0, self.ny - 1, out=ij[:, 1])
        return ij

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (
            self.origin[0] + (i + 0.5) * self.cell_size,
            self.origin[1] + (j + 0.5) * self.cell_size,
        )

    def contains_cell(self, i: int, j: int) -> bool:
        return 0 <= i < self.nx and 0 <= j < self.ny


class VectorField:
    """Gridded 2-D velocity field, bilinear in space and linear in time.

    frames has shape (nt, nx, ny, 2) with nodes at
    origin + (i*spacing, j*spacing) and frame k at time k*frame_dt.
    Samples outside the node lattice or the time span are clamped to the
    nearest node/frame; each such query bumps ``clamp_events``.
    """

    def __init__(self, origin, spacing: float, frame_dt: float, frames: np.ndarray):
        frames = np.ascontiguousarray(frames, dtype=np.float64)
        if frames.ndim != 4 or frames.shape[3] != 2:
            raise ConfigError(f"frames must have shape (nt, nx, ny, 2), got {frames.shape}")
        if frames.shape[0] < 1:
            raise ConfigError("need at least one time frame")
        if spacing <= 0 or frame_dt <= 0:
            raise ConfigError("spacing and frame_dt must be positive")
        if not np.isfinite(frames).all():
            raise ConfigError("field contains non-finite velocities")
        self.origin = (float(origin[0]), float(origin[1]))
        self.spacing = float(spacing)
        self.frame_dt = float(frame_dt)
        self.frames = frames
        self.nt, self.nx, self.ny = frames.shape[:3]
        self.clamp_events = 0

    @property
    def extent(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return (ox, oy, ox + (self.nx - 1) * self.spacing, oy + (self.ny - 1) * self.spacing)

    @property
    def duration(self) -> float:
        return (self.nt - 1) * self.frame_dt

    def covers(self, extent, duration: float) -> bool:
        e = self.extent
        return (
            e[0] <= extent[0] and e[1] <= extent[1]
            and e[2] >= extent[2] and e[3] >= extent[3]
            and self.duration >= duration - 1e-9
        )

    def sample(self, p, t: float) -> tuple[float, float]:
        """Velocity (u, v) in m/s at point ``p`` and time ``t``."""
        out = self.sample_many(np.asarray([p], dtype=np.float64), t)
        return (float(out[0, 0]), float(out[0, 1]))

    def sample_many(self, xy: np.ndarray, t: float) -> np.ndarray:
        """Velocities for an (M, 2) array of points at a common time ``t``."""
        # Time bracket (linear blend between the two surrounding frames).
        if self.nt == 1:
            k0 = k1 = 0
            tf = 0.0
        else:
            tau = t / self.frame_dt
            if tau < 0.0 or tau > self.nt - 1:
                self.clamp_events += 1
                tau = min(max(tau, 0.0), float(self.nt - 1))
            k0 = min(int(tau), self.nt - 2)
            k1 = k0 + 1
            tf = tau - k0

        fx = (xy[:, 0] - self.origin[0]) / self.spacing
        fy = (xy[:, 1] - self.origin[1]) / self.spacing
        if fx.size and (fx.min() < 0.0 or fx.max() > self.nx - 1 or fy.min() < 0.0 or fy.max() > self.ny - 1):
            self.clamp_events += 1
            fx = np.clip(fx, 0.0, self.nx - 1)
            fy = np.clip(fy, 0.0, self.ny - 1)

        i0 = np.minimum(fx.astype(np.int64), self.nx - 2) if self.nx > 1 else np.zeros(len(fx), np.int64)
        j0 = np.minimum(fy.astype(np.int64), self.ny - 2) if self.ny > 1 else np.zeros(len(fy), np.int64)
        wx = (fx - i0)[:, None]
        wy = (fy - j0)[:, None]
        i1 = np.minimum(i0 + 1, self.nx - 1)
        j1 = np.minimum(j0 + 1, self.ny - 1)

        def bilerp(frame):
            v00 = frame[i0, j0]
            v10 = frame[i1, j0]
            v01 = frame[i0, j1]
            v11 = frame[i1, j1]
            top = v00 + (v10 - v00) * wx
            bot = v01 + (v11 - v01) * wx
            return top + (bot - top) * wy

        out = bilerp(self.frames[k0])
        if k1 != k0 and tf != 0.0:
            out += (bilerp(self.frames[k1]) - out) * tf
        return out


@dataclass(frozen=True)
class FieldPair:
    """Current plus wind field driving the drift of floating objects."""

    current: VectorField
    wind: VectorField

    def covers(self, extent, duration: float) -> bool:
        return self.current.covers(extent, duration) and self.wind.covers(extent, duration)


@dataclass(frozen=True)
class FieldGenParams:
    """Knobs for the synthetic current/wind generator.

    The current is a sum of ``n_gyres`` slowly revolving gyres over a uniform
    background drift; the wind is a near-uniform vector whose direction swings
    sinusoidally, with small per-node spatial noise.
    """

    n_gyres: int = 4
    gyre_radius_m: tuple[float, float] = (8_000.0, 20_000.0)
    gyre_peak_ms: tuple[float, float] = (0.25, 0.65)
    background_ms: tuple[float, float] = (0.10, 0.30)
    current_max_ms: float = 1.0
    wind_mean_ms: tuple[float, float] = (3.0, 8.0)
    wind_dir_swing_rad: float = 0.6
    wind_swing_period_s: float = 21_600.0
    wind_noise_ms: float = 1.0
    wind_max_ms: float = 12.0
    spacing_m: float = 5_000.0
    frame_dt_s: float = 3_600.0

    def __post_init__(self):
        for name in ("current_max_ms", "wind_max_ms", "wind_noise_ms", "spacing_m", "frame_dt_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.n_gyres < 0:
            raise ConfigError(f"n_gyres must be nonnegative, got {self.n_gyres}")
        if self.spacing_m == 0 or self.frame_dt_s == 0:
            raise ConfigError("spacing_m and frame_dt_s must be positive")


def _node_axes(extent, spacing):
    x0, y0, x1, y1 = extent
    nx = max(2, int(math.ceil((x1 - x0) / spacing)) + 1)
    ny = max(2, int(math.ceil((y1 - y0) / spacing)) + 1)
    return nx, ny


def generate_synthetic_fields(seed: int, extent, duration: float,
                              params: FieldGenParams | None = None) -> FieldPair:
    """Deterministically generate a current/wind pair covering ``extent``.

    Same seed, extent, duration, and params give bit-identical fields.
    """
    if duration <= 0:
        raise ConfigError(f"duration must be positive, got {duration}")
    params = params or FieldGenParams()
    rng = np.random.default_rng(seed)
    x0, y0 = extent[0], extent[1]
    nx, ny = _node_axes(extent, params.spacing_m)
    nt = int(math.ceil(duration / params.frame_dt_s)) + 1
    xs = x0 + np.arange(nx) * params.spacing_m
    ys = y0 + np.arange(ny) * params.spacing_m
    gx, gy = np.meshgrid(xs, ys, indexing="ij")

    # Current: revolving gyres + uniform background drift.
    bg_speed = rng.uniform(*params.background_ms)
    bg_dir = rng.uniform(0.0, 2.0 * math.pi)
    gyres = []
    for _ in range(params.n_gyres):
        gyres.append({
            "cx": rng.uniform(extent[0], extent[2]),
            "cy": rng.uniform(extent[1], extent[3]),
            "radius": rng.uniform(*params.gyre_radius_m),
            "peak": rng.uniform(*params.gyre_peak_ms),
            "sign": 1.0 if rng.random() < 0.5 else -1.0,
            "orbit": rng.uniform(0.05, 0.25) * rng.uniform(*params.gyre_radius_m),
            "omega": 2.0 * math.pi / rng.uniform(40_000.0, 120_000.0),
            "phase": rng.uniform(0.0, 2.0 * math.pi),
        })

    cur = np.zeros((nt, nx, ny, 2))
    cur[..., 0] = bg_speed * math.cos(bg_dir)
    cur[..., 1] = bg_speed * math.sin(bg_dir)
    for k in range(nt):
        t = k * params.frame_dt_s
        for g in gyres:
            cx = g["cx"] + g["orbit"] * math.cos(g["omega"] * t + g["phase"])
            cy = g["cy"] + g["orbit"] * math.sin(g["omega"] * t + g["phase"])
            dx = gx - cx
            dy = gy - cy
            r = np.hypot(dx, dy)
            rho = r / g["radius"]
            # Rankine-style vortex: tangential speed peaks at the gyre radius.
            speed = g["peak"] * rho * np.exp(1.0 - rho)
            with np.errstate(invalid="ignore", divide="ignore"):
                tx = np.where(r > 0, -dy / np.maximum(r, 1e-12), 0.0)
                ty = np.where(r > 0, dx / np.maximum(r, 1e-12), 0.0)
            cur[k, ..., 0] += g["sign"] * speed * tx
            cur[k, ..., 1] += g["sign"] * speed * ty

    mag = np.hypot(cur[..., 0], cur[..., 1])
    peak = mag.max() if mag.size else 0.0
    if peak > params.current_max_ms > 0:
        cur *= params.current_max_ms / peak * (1.0 - 1e-9)

    # Wind: uniform vector, slow sinusoidal heading change, static spatial noise.
    w_speed = rng.uniform(*params.wind_mean_ms)
    w_dir0 = rng.uniform(0.0, 2.0 * math.pi)
    w_phase = rng.uniform(0.0, 2.0 * math.pi)
    noise = rng.normal(0.0, params.wind_noise_ms, size=(nx, ny, 2)) if params.wind_noise_ms > 0 \
        else np.zeros((nx, ny, 2))
    wnd = np.zeros((nt, nx, ny, 2))
    for k in range(nt):
        t = k * params.frame_dt_s
        theta = w_dir0 + params.wind_dir_swing_rad * math.sin(
            2.0 * math.pi * t / params.wind_swing_period_s + w_phase)
        wnd[k, ..., 0] = w_speed * math.cos(theta) + noise[..., 0]
        wnd[k, ..., 1] = w_speed * math.sin(theta) + noise[..., 1]
    wmag = np.hypot(wnd[..., 0], wnd[..., 1])
    wpeak = wmag.max() if wmag.size else 0.0
    if wpeak > params.wind_max_ms > 0:
        wnd *= params.wind_max_ms / wpeak * (1.0 - 1e-9)

    current = VectorField((x0, y0), params.spacing_m, params.frame_dt_s, cur)
    wind = VectorField((x0, y0), params.spacing_m, params.frame_dt_s, wnd)
    return FieldPair(current=current, wind=wind)


# --- field file container ----------------------------------------------------
#
# Layout (little-endian throughout):
#   bytes 0..7    magic "SARFIELD"
#   bytes 8..11   uint32 format version (currently 1)
#   bytes 12..15  uint32 length L of the JSON header
#   bytes 16..16+L-1   UTF-8 JSON header:
#       {"fields": [{"name", "origin", "spacing_m", "frame_dt_s",
#                    "nt", "nx", "ny"}, ...]}
#   then, per header entry in order, nt*nx*ny*2 float64 values
#   (row-major over (t, x, y), u before v).


def _field_header(name: str, f: VectorField) -> dict:
    return {
        "name": name,
        "origin": [f.origin[0], f.origin[1]],
        "spacing_m": f.spacing,
        "frame_dt_s": f.frame_dt,
        "nt": f.nt,
        "nx": f.nx,
        "ny": f.ny,
    }


def save_fields(fields: FieldPair, path) -> None:
    """Write a FieldPair to the versioned binary container at ``path``."""
    header = {
        "fields": [
            _field_header("current", fields.current),
            _field_header("wind", fields.wind),
        ]
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FIELD_FILE_MAGIC)
        fh.write(np.uint32(FIELD_FILE_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for f in (fields.current, fields.wind):
            fh.write(np.ascontiguousarray(f.frames, dtype="<f8").tobytes())


def load_fields(path) -> FieldPair:
    """Read a FieldPair written by :func:`save_fields`; errors name byte offsets."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise FieldFileError(f"file too short for header, {len(data)} bytes", 0)
    if data[:8] != FIELD_FILE_MAGIC:
        raise FieldFileError(f"bad magic {data[:8]!r}, expected {FIELD_FILE_MAGIC!r}", 0)
    version = int(np.frombuffer(data[8:12], dtype="<u4")[0])
    if version != FIELD_FILE_VERSION:
        raise FieldFileError(f"unsupported format version {version}", 8)
    hlen = int(np.frombuffer(data[12:16], dtype="<u4")[0])
    if 16 + hlen > len(data):
        raise FieldFileError(f"header claims {hlen} bytes, only {len(data) - 16} available", 12)
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFileError(f"malformed JSON header: {exc}", 16) from exc

    entries = header.get("fields")
    if not isinstance(entries, list) or {e.get("name") for e in entries} != {"current", "wind"}:
        raise FieldFileError("header must describe exactly a 'current' and a 'wind' field", 16)

    offset = 16 + hlen
    loaded = {}
    for entry in entries:
        try:
            nt, nx, ny = int(entry["nt"]), int(entry["nx"]), int(entry["ny"])
            origin = (float(entry["origin"][0]), float(entry["origin"][1]))
            spacing = float(entry["spacing_m"])
            frame_dt = float(entry["frame_dt_s"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FieldFileError(f"field entry missing/invalid key: {exc}", 16) from exc
        if nt < 1 or nx < 1 or ny < 1:
            raise FieldFileError(f"nonpositive dimensions {nt}x{nx}x{ny} for {entry['name']}", 16)
        count = nt * nx * ny * 2
        nbytes = count * 8
        if offset + nbytes > len(data):
            raise FieldFileError(
                f"truncated payload for {entry['name']}: expected {nbytes} bytes, "
                f"got {len(data) - offset}", offset)
        frames = np.frombuffer(data[offset:offset + nbytes], dtype="<f8").reshape(nt, nx, ny, 2)
        if not np.isfinite(frames).all():
            bad = int(np.flatnonzero(~np.isfinite(frames.ravel()))[0])
            raise FieldFileError(f"non-finite value in {entry['name']} payload", offset + bad * 8)
        try:
            loaded[entry["name"]] = VectorField(origin, spacing, frame_dt, frames.copy())
        except ConfigError as exc:
            raise FieldFileError(str(exc), offset) from exc
        offset += nbytes
    if offset != len(data):
        raise FieldFileError(f"{len(data) - offset} trailing bytes after payload", offset)
    return FieldPair(current=loaded["current"], wind=loaded["wind"])
