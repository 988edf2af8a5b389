"""Terrain library: static analytic surfaces plus load-reactive pivots.

Every terrain answers vectorized height(x, y) queries; the two pivoting
terrains additionally evolve a tilt state from the robot's load position via
`update`, clamped at their maximum angles. Random terrains use a hash-based
lattice so heights are deterministic functions of (seed, position) with
unbounded extent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TerrainConfig

TERRAIN_KINDS = (
    "flat",
    "heightfield",
    "perlin",
    "tabletop",
    "seesaw",
    "sinusoidal",
    "stairs",
)

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Uniform [0,1) lattice noise from integer coordinates (splitmix-style)."""
    h = (
        ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
        + iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
        + np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0xD6E8FEB86659FD93)
    )
    h ^= h >> np.uint64(30)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(27)
    h *= np.uint64(0x94D049BB133111EB)
    h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _lattice(x: np.ndarray, y: np.ndarray, cell: float, seed: int, smooth: bool) -> np.ndarray:
    """Interpolated lattice noise in [0,1]; bilinear or smoothstep blending."""
    gx = np.asarray(x, dtype=float) / cell
    gy = np.asarray(y, dtype=float) / cell
    ix = np.floor(gx)
    iy = np.floor(gy)
    fx = gx - ix
    fy = gy - iy
    if smooth:
        fx = fx * fx * (3.0 - 2.0 * fx)
        fy = fy * fy * (3.0 - 2.0 * fy)
    ix = ix.astype(np.int64)
    iy = iy.astype(np.int64)
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    return (
        v00 * (1 - fx) * (1 - fy)
        + v10 * fx * (1 - fy)
        + v01 * (1 - fx) * fy
        + v11 * fx * fy
    )


@dataclass
class Terrain:
    """Base terrain: flat ground at z = 0."""

    kind: str = "flat"

    def height(self, x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    def normal(self, x, y, eps: float = 1e-4) -> np.ndarray:
        x = float(np.asarray(x).reshape(()))
        y = float(np.asarray(y).reshape(()))
        dhdx = (self.height(x + eps, y) - self.height(x - eps, y)) / (2 * eps)
        dhdy = (self.height(x, y + eps) - self.height(x, y - eps)) / (2 * eps)
        n = np.array([-float(dhdx), -float(dhdy), 1.0])
        return n / np.linalg.norm(n)

    def update(self, com_xy: np.ndarray, dt: float) -> None:
        """Load-reactive terrains override this; static terrains ignore it."""


@dataclass
class Heightfield(Terrain):
    kind: str = "heightfield"
    cell: float = 0.25
    amplitude: float = 0.04
    seed: int = 0

    def height(self, x, y):
        return self.amplitude * _lattice(x, y, self.cell, self.seed, smooth=False)


@dataclass
class PerlinTerrain(Terrain):
    kind: str = "perlin"
    wavelength: float = 1.5
    amplitude: float = 0.04
    octaves: int = 2
    seed: int = 0

    def height(self, x, y):
        total = np.zeros_like(np.asarray(x, dtype=float))
        norm = 0.0
        for o in range(self.octaves):
            w = 0.5**o
            cell = self.wavelength / (2**o)
            total = total + w * (
                _lattice(x, y, cell, self.seed + 7919 * o, smooth=True) - 0.5
            )
            norm += 0.5 * w
        return self.amplitude * total / norm * 0.5


@dataclass
class Sinusoidal(Terrain):
    kind: str = "sinusoidal"
    wavelength: float = 2.0
    max_incline_deg: float = 11.5

    @property
    def amplitude(self) -> float:
        return self.wavelength * math.tan(math.radians(self.max_incline_deg)) / (2 * math.pi)

    def height(self, x, y):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.sin(2 * math.pi * x / self.wavelength)


@dataclass
class Stairs(Terrain):
    kind: str = "stairs"
    rise: float = 0.04
    tread: float = 0.3
    start: float = 1.0

    def height(self, x, y):
        x = np.asarray(x, dtype=float)
        steps = np.floor((x - self.start) / self.tread) + 1.0
        return self.rise * np.maximum(0.0, steps)


@dataclass
class Tabletop(Terrain):
    """Omnidirectional pivot: the plane tilts toward the robot's load."""

    kind: str = "tabletop"
    max_deg: float = 5.0
    pivot: tuple[float, float] = (0.0, 0.0)
    lag: float = 0.4
    reach: float = 0.5
    slope: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def height(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.slope[0] * (x - self.pivot[0]) + self.slope[1] * (y - self.pivot[1])

    def update(self, com_xy: np.ndarray, dt: float) -> None:
        s_max = math.tan(math.radians(self.max_deg))
        r = np.asarray(com_xy, dtype=float) - np.asarray(self.pivot)
        dist = float(np.linalg.norm(r))
        if dist > 1e-9:
            target = -s_max * min(dist / self.reach, 1.0) * (r / dist)
        else:
            target = np.zeros(2)
        alpha = 1.0 - math.exp(-dt / self.lag)
        self.slope = self.slope + alpha * (target - self.slope)
        norm = float(np.linalg.norm(self.slope))
        if norm > s_max:
            self.slope = self.slope * (s_max / norm)


@dataclass
class Seesaw(Terrain):
    """Single-axis pivot about the y line through the pivot point."""

    kind: str = "seesaw"
    max_deg: float = 6.0
    pivot_x: float = 0.0
    lag: float = 0.4
    reach: float = 0.5
    slope_x: float = 0.0

    def height(self, x, y):
        x = np.asarray(x, dtype=float)
        return self.slope_x * (x - self.pivot_x)

    def update(self, com_xy: np.ndarray, dt: float) -> None:
        s_max = math.tan(math.radians(self.max_deg))
        rx = float(com_xy[0]) - self.pivot_x
        target = -s_max * math.tanh(rx / self.reach)
        alpha = 1.0 - math.exp(-dt / self.lag)
        self.slope_x += alpha * (target - self.slope_x)
        self.slope_x = min(s_max, max(-s_max, self.slope_x))


def make_terrain(
    kind: str,
    cfg: TerrainConfig | None = None,
    rng_seed: int = 0,
    amplitude: float | None = None,
) -> Terrain:
    """Build a terrain by kind. Random kinds derive their field from rng_seed;
    the heightfield amplitude is drawn from the configured range unless given."""
    cfg = cfg or TerrainConfig()
    if kind == "flat":
        return Terrain()
    if kind == "heightfield":
        if amplitude is None:
            rng = np.random.default_rng(rng_seed)
            lo, hi = cfg.heightfield_amp_range
            amplitude = float(rng.uniform(lo, hi))
        return Heightfield(cell=cfg.heightfield_cell, amplitude=amplitude, seed=rng_seed)
    if kind == "perlin":
        return PerlinTerrain(
            wavelength=cfg.perlin_wavelength,
            amplitude=cfg.perlin_amplitude if amplitude is None else amplitude,
            octaves=cfg.perlin_octaves,
            seed=rng_seed,
        )
    if kind == "sinusoidal":
        return Sinusoidal(
            wavelength=cfg.sinusoidal_wavelength,
            max_incline_deg=cfg.sinusoidal_max_incline_deg,
        )
    if kind == "stairs":
        return Stairs(rise=cfg.stairs_rise, tread=cfg.stairs_tread, start=cfg.stairs_start)
    if kind == "tabletop":
        return Tabletop(max_deg=cfg.tabletop_max_deg, lag=cfg.pivot_lag, reach=cfg.pivot_reach)
    if kind == "seesaw":
        return Seesaw(max_deg=cfg.seesaw_max_deg, lag=cfg.pivot_lag, reach=cfg.pivot_reach)
    raise ValueError(f"unknown terrain kind {kind!r}")


def export_grid_csv(terrain: Terrain, path, extent: float = 5.0, step: float = 0.1) -> None:
    """Dump terrain heights on a square grid for external visualization."""
    xs = np.arange(-extent, extent + step / 2, step)
    ys = np.arange(-extent, extent + step / 2, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    hz = terrain.height(gx, gy)
    with open(path, "w") as fh:
        fh.write("x,y,z\n")
        for i in range(gx.shape[0]):
            for j in range(gx.shape[1]):
                fh.write(f"{gx[i, j]!r},{gy[i, j]!r},{float(hz[i, j])!r}\n")
