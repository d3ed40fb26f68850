"""Observation synthesis: masked feature vectors or a flat-shaded first-person raster."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vatlab.sim import ArenaConfig, ConfigError, RelativeState, WorldState, in_fov, relative_state

RHO_NORM = 150.0
COLOR_SEPARATION = 0.3
LIGHT_RANGE = (0.4, 1.0)
VECTOR_DIM = 4


@dataclass(frozen=True)
class ObservationMode:
    kind: str = "vector"
    raster_width: int = 84
    raster_height: int = 84
    vector_noise_std: float = 0.0

    def validate(self) -> ObservationMode:
        if self.kind not in ("vector", "raster"):
            raise ConfigError(f"observation kind must be 'vector' or 'raster', got {self.kind!r}")
        if self.raster_width < 8 or self.raster_height < 8:
            raise ConfigError("raster dimensions must be >= 8")
        if self.vector_noise_std < 0:
            raise ConfigError("vector_noise_std must be >= 0")
        return self

    @property
    def shape(self) -> tuple[int, ...]:
        if self.kind == "vector":
            return (VECTOR_DIM,)
        return (self.raster_height, self.raster_width, 3)


@dataclass(frozen=True)
class SceneRandomization:
    wall_color: tuple[float, float, float] = (0.8, 0.8, 0.8)
    floor_color: tuple[float, float, float] = (0.4, 0.4, 0.4)
    target_color: tuple[float, float, float] = (0.9, 0.1, 0.1)
    light: float = 1.0


def randomize_scene(rng: np.random.Generator) -> SceneRandomization:
    wall = rng.uniform(0.0, 1.0, 3)
    floor = rng.uniform(0.0, 1.0, 3)
    target = rng.uniform(0.0, 1.0, 3)
    while np.max(np.abs(target - wall)) < COLOR_SEPARATION:
        target = rng.uniform(0.0, 1.0, 3)
    light = rng.uniform(*LIGHT_RANGE)
    return SceneRandomization(tuple(wall.tolist()), tuple(floor.tolist()), tuple(target.tolist()), float(light))


def vector_features(rel: RelativeState, fov: float, noise_std: float = 0.0,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """``[visible, rho/RHO_NORM, sin(theta), cos(theta)]``; all zeros when the target is out of view."""
    if not in_fov(rel, fov):
        return np.zeros(VECTOR_DIM)
    feats = np.array([min(rel.rho / RHO_NORM, 1.0), math.sin(rel.theta), math.cos(rel.theta)])
    if noise_std > 0.0:
        feats = feats + rng.normal(0.0, noise_std, 3)
    return np.array([1.0, np.clip(feats[0], 0.0, 1.0), *np.clip(feats[1:], -1.0, 1.0)])


def target_box(rel: RelativeState, fov: float, width: int, height: int,
               rho_star: float = 50.0) -> tuple[int, int, int, int] | None:
    """Pixel box ``(row0, row1, col0, col1)`` (half-open) of the target, or None when out of view.

    Columns grow to the right; a positive bearing (target to the right) lands right of centre.
    Apparent height is ``k / rho`` with ``k`` chosen so the target fills a quarter of the
    image height at ``rho_star``.
    """
    if not in_fov(rel, fov):
        return None
    center = (rel.theta / (fov / 2.0) + 1.0) / 2.0 * width
    k = rho_star * height / 4.0
    h = height if rel.rho <= k / height else k / rel.rho
    w = 0.6 * h
    horizon = height / 2.0
    r0 = max(0, int(round(horizon - h / 2.0)))
    r1 = min(height, max(r0 + 1, int(round(horizon + h / 2.0))))
    c0 = int(round(center - w / 2.0))
    c1 = max(c0 + 1, int(round(center + w / 2.0)))
    c0, c1 = max(0, c0), min(width, c1)
    if c0 >= c1:
        return None
    return r0, r1, c0, c1


def render_raster(rel: RelativeState, scene: SceneRandomization, fov: float, width: int,
                  height: int, rho_star: float = 50.0) -> np.ndarray:
    img = np.empty((height, width, 3))
    horizon = height // 2
    img[:horizon] = np.asarray(scene.wall_color) * scene.light
    img[horizon:] = np.asarray(scene.floor_color) * scene.light
    box = target_box(rel, fov, width, height, rho_star)
    if box is not None:
        r0, r1, c0, c1 = box
        img[r0:r1, c0:c1] = np.asarray(scene.target_color) * scene.light
    return np.clip(img, 0.0, 1.0)


def observe(world: WorldState, mode: ObservationMode, scene: SceneRandomization, cfg: ArenaConfig,
            rng: np.random.Generator | None = None, rho_star: float = 50.0) -> np.ndarray:
    rel = relative_state(world.tracker, world.target)
    if mode.kind == "vector":
        return vector_features(rel, cfg.fov, mode.vector_noise_std, rng)
    return render_raster(rel, scene, cfg.fov, mode.raster_width, mode.raster_height, rho_star)


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    """Dump an ``HxWx3`` image with values in [0, 1] as a binary PPM (P6)."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {image.shape}")
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w, _ = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"not a P6 file: {path}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    data = np.frombuffer(raw[pos + 1:pos + 1 + w * h * 3], dtype=np.uint8)
    return data.reshape(h, w, 3).astype(np.float64) / maxval
