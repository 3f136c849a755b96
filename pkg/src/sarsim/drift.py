"""Lagrangian motion of floating objects and particle clouds.

Every drifting thing in the simulation (belief particles and the true,
hidden targets alike) follows the same law: advection by the local water
current plus a leeway fraction of the wind, with an isotropic diffusion
term for growing position uncertainty. Euler-Maruyama stepping, one step
per engine tick.

Advecting tens of thousands of particles every tick dominates the runtime
of batch experiments, so the engine pre-fuses the two fields into one
effective lattice (``EffectiveDrift``) when they share node geometry; the
fused sampler blends the bracketing time frames once per query time and
interpolates in float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import ConfigError, FieldPair
from .belief import ParticleEnsemble

try:
    from numba import njit as _njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class DriftParams:
    """Motion-model constants: leeway fraction, diffusion (m^2/s), step dt (s)."""

    wind_leeway_factor: float = 0.03
    diffusion_m2_s: float = 1.0
    dt_s: float = 100.0 / 18.0

    def __post_init__(self):
        if not 0.0 <= self.wind_leeway_factor <= 0.1:
            raise ConfigError(f"wind_leeway_factor must be in [0, 0.1], got {self.wind_leeway_factor}")
        if self.diffusion_m2_s < 0:
            raise ConfigError(f"diffusion_m2_s must be nonnegative, got {self.diffusion_m2_s}")
        if self.dt_s <= 0:
            raise ConfigError(f"dt_s must be positive, got {self.dt_s}")


@dataclass
class TruthTarget:
    """Actual (hidden) target position; found_at is set once, on detection."""

    position: np.ndarray
    found_at: float | None = None

    def mark_found(self, t: float) -> None:
        if self.found_at is None:
            self.found_at = t

    @property
    def found(self) -> bool:
        return self.found_at is not None


class EffectiveDrift:
    """current + leeway * wind pre-combined for fast repeated sampling.

    When both fields live on the same node lattice their frames are summed
    once up front (interpolation is linear, so sampling the sum equals
    summing the samples) and advection runs through one fused kernel,
    jitted when numba is installed; otherwise each query falls back to
    sampling the two fields separately.
    """

    def __init__(self, fields: FieldPair, leeway: float):
        self.leeway = float(leeway)
        cur, wnd = fields.current, fields.wind
        self._pair = None
        if (cur.origin == wnd.origin and cur.spacing == wnd.spacing
                and cur.frame_dt == wnd.frame_dt and cur.frames.shape == wnd.frames.shape
                and cur.nx >= 2 and cur.ny >= 2):
            fused = cur.frames + self.leeway * wnd.frames
            self._frames = np.ascontiguousarray(
                fused.reshape(cur.nt, cur.nx * cur.ny, 2), dtype=np.float32)
            self.origin = cur.origin
            self.inv_spacing = 1.0 / cur.spacing
            self.frame_dt = cur.frame_dt
            self.nt, self.nx, self.ny = cur.nt, cur.nx, cur.ny
            self._blend_t = None
            self._blend = None
        else:
            self._pair = fields

    @property
    def fused(self) -> bool:
        return self._pair is None

    def sample_many(self, xy: np.ndarray, t: float) -> np.ndarray:
        if self._pair is not None:
            vel = self._pair.current.sample_many(xy, t)
            if self.leeway != 0.0:
                vel = vel + self.leeway * self._pair.wind.sample_many(xy, t)
            return vel
        return _bilerp_flat(self._frame_at(t), self.nx, self.ny,
                            self.origin[0], self.origin[1], self.inv_spacing, xy)

    def advect(self, positions: np.ndarray, t: float, dt: float) -> np.ndarray:
        """positions + velocity(positions, t) * dt in one fused pass."""
        if self._pair is None and _HAVE_NUMBA:
            frame = self._frame_at(t)
            return _advect_numba(positions, frame, self.nx, self.ny,
                                 self.origin[0], self.origin[1],
                                 self.inv_spacing, dt)
        vel = self.sample_many(positions, t)
        if vel.dtype == np.float32:
            np.multiply(vel, np.float32(dt), out=vel)
            return positions + vel
        return positions + vel * dt

    def _frame_at(self, t: float) -> np.ndarray:
        if self._blend_t == t:
            return self._blend
        if self.nt == 1:
            frame = self._frames[0]
        else:
            tau = min(max(t / self.frame_dt, 0.0), float(self.nt - 1))
            k0 = min(int(tau), self.nt - 2)
            tf = np.float32(tau - k0)
            if tf == 0.0:
                frame = self._frames[k0]
            else:
                frame = self._frames[k0] * (np.float32(1.0) - tf) + self._frames[k0 + 1] * tf
        self._blend_t = t
        self._blend = np.ascontiguousarray(frame)
        return self._blend


def _advect_plain(pos, frame, nx, ny, ox, oy, inv_sp, dt):
    out = np.empty_like(pos)
    for m in range(pos.shape[0]):
        fx = (pos[m, 0] - ox) * inv_sp
        fy = (pos[m, 1] - oy) * inv_sp
        if fx < 0.0:
            fx = 0.0
        elif fx > nx - 1.0:
            fx = nx - 1.0
        if fy < 0.0:
            fy = 0.0
        elif fy > ny - 1.0:
            fy = ny - 1.0
        i0 = int(fx)
        if i0 > nx - 2:
            i0 = nx - 2
        j0 = int(fy)
        if j0 > ny - 2:
            j0 = ny - 2
        wx = fx - i0
        wy = fy - j0
        b = i0 * ny + j0
        u0 = frame[b, 0] + (frame[b + ny, 0] - frame[b, 0]) * wx
        v0 = frame[b, 1] + (frame[b + ny, 1] - frame[b, 1]) * wx
        u1 = frame[b + 1, 0] + (frame[b + ny + 1, 0] - frame[b + 1, 0]) * wx
        v1 = frame[b + 1, 1] + (frame[b + ny + 1, 1] - frame[b + 1, 1]) * wx
        out[m, 0] = pos[m, 0] + (u0 + (u1 - u0) * wy) * dt
        out[m, 1] = pos[m, 1] + (v0 + (v1 - v0) * wy) * dt
    return out


if _HAVE_NUMBA:
    _advect_numba = _njit(cache=True)(_advect_plain)


def _bilerp_flat(frame: np.ndarray, nx: int, ny: int, ox: float, oy: float,
                 inv_spacing: float, xy: np.ndarray) -> np.ndarray:
    """Bilinear interpolation over one flattened (nx*ny, 2) frame, edge-clamped.

    Works in float32 throughout; contiguous per-axis buffers keep the hot
    arithmetic cheap for large particle batches.
    """
    ax = np.empty((2, len(xy)), dtype=np.float32)
    ax[0] = xy[:, 0]
    ax[1] = xy[:, 1]
    fx, fy = ax[0], ax[1]
    fx -= np.float32(ox)
    fx *= np.float32(inv_spacing)
    fy -= np.float32(oy)
    fy *= np.float32(inv_spacing)
    np.clip(fx, 0.0, nx - 1.0, out=fx)
    np.clip(fy, 0.0, ny - 1.0, out=fy)
    i0f = np.minimum(np.floor(fx), np.float32(nx - 2))
    j0f = np.minimum(np.floor(fy), np.float32(ny - 2))
    fx -= i0f
    fy -= j0f
    base = i0f.astype(np.int32)
    base *= ny
    base += j0f.astype(np.int32)
    g00 = frame[base]
    g10 = frame[base + ny]
    base += 1
    g01 = frame[base]
    g11 = frame[base + ny]
    wx = fx[:, None]
    wy = fy[:, None]
    g10 -= g00
    g10 *= wx
    g10 += g00
    g11 -= g01
    g11 *= wx
    g11 += g01
    g11 -= g10
    g11 *= wy
    g11 += g10
    return g11


def drift_step(positions: np.ndarray, fields: FieldPair | EffectiveDrift, t: float,
               params: DriftParams, rng: np.random.Generator) -> np.ndarray:
    """Advance an (M, 2) array of positions by one step of length ``params.dt_s``.

    p' = p + (current(p, t) + leeway * wind(p, t)) * dt + sqrt(2 D dt) * eta
    with eta a standard 2-D normal draw per row. Returns a new array.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if isinstance(fields, EffectiveDrift):
        if abs(fields.leeway - params.wind_leeway_factor) > 1e-12:
            raise ConfigError("EffectiveDrift was fused with a different leeway factor")
        out = fields.advect(positions, t, params.dt_s)
    else:
        vel = fields.current.sample_many(positions, t)
        if params.wind_leeway_factor != 0.0:
            vel = vel + params.wind_leeway_factor * fields.wind.sample_many(positions, t)
        out = positions + vel * params.dt_s
    if params.diffusion_m2_s > 0.0:
        sigma = math.sqrt(2.0 * params.diffusion_m2_s * params.dt_s)
        noise = rng.standard_normal(positions.shape, dtype=np.float32)
        noise *= np.float32(sigma)
        out += noise
    return out


def init_ensemble(center, n: int, sigma: float, rng: np.random.Generator,
                  target_id: int = 0, miss_prob: float = 0.0) -> ParticleEnsemble:
    """Seed a belief cloud: n particles i.i.d. from an isotropic Gaussian.

    All weights start at 1/n.
    """
    if n < 1:
        raise ConfigError(f"need at least one particle, got {n}")
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    positions = np.asarray(center, dtype=np.float64) + sigma * rng.standard_normal((n, 2))
    return ParticleEnsemble(target_id=target_id, positions=positions, miss_prob=miss_prob)


def sample_truth(center, sigma: float, rng: np.random.Generator) -> TruthTarget:
    """Draw the true target position from the same Gaussian as its belief cloud."""
    if sigma < 0:
        raise ConfigError(f"sigma must be nonnegative, got {sigma}")
    pos = np.asarray(center, dtype=np.float64) + sigma * rng.standard_normal(2)
    return TruthTarget(position=pos)
