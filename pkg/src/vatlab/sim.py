"""Planar tracker/target world: poses, unicycle kinematics, spawning and reward.

Headings are counter-clockwise from the world x axis and a positive angular command
turns the tracker counter-clockwise (left). Bearings ``theta`` follow the compass
convention instead: measured clockwise from the tracker's forward axis, so a positive
bearing means the target is to the tracker's right. Closing a positive bearing
therefore takes a negative angular command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.pi - (math.pi - a) % (2.0 * math.pi)
    return math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class Pose2D:
    x: float  # cm
    y: float  # cm
    heading: float  # rad, (-pi, pi]

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


@dataclass(frozen=True)
class RelativeState:
    rho: float  # cm
    theta: float  # rad, clockwise from forward: positive = target to the right


@dataclass(frozen=True)
class ActionCommand:
    v_norm: float
    w_norm: float

    def __post_init__(self):
        object.__setattr__(self, "v_norm", min(1.0, max(-1.0, float(self.v_norm))))
        object.__setattr__(self, "w_norm", min(1.0, max(-1.0, float(self.w_norm))))


@dataclass(frozen=True)
class ArenaConfig:
    width: float = 500.0
    height: float = 500.0
    spawn_radius_min: float = 30.0
    spawn_radius_max: float = 150.0
    fov: float = math.radians(90.0)
    v_max: float = 8.0  # cm / step
    w_max: float = math.radians(8.0)  # rad / step
    episode_len: int = 250

    def validate(self) -> ArenaConfig:
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"arena size must be positive, got {self.width}x{self.height}")
        if not 0 < self.spawn_radius_min <= self.spawn_radius_max < min(self.width, self.height) / 2:
            raise ConfigError(
                "need 0 < spawn_radius_min <= spawn_radius_max < min(width, height)/2, got "
                f"[{self.spawn_radius_min}, {self.spawn_radius_max}] in {self.width}x{self.height}"
            )
        if not 0 < self.fov <= math.pi:
            raise ConfigError(f"fov must lie in (0, pi], got {self.fov}")
        if self.v_max <= 0 or self.w_max <= 0:
            raise ConfigError("v_max and w_max must be positive")
        if self.episode_len <= 0:
            raise ConfigError("episode_len must be positive")
        return self

    @property
    def center(self) -> tuple[float, float]:
        return self.width / 2.0, self.height / 2.0


@dataclass(frozen=True)
class RewardParams:
    A: float = 0.1
    rho_star: float = 50.0
    rho_max: float = 20.0
    theta_star: float = 0.0
    theta_max: float = math.radians(10.0)

    def validate(self) -> RewardParams:
        if self.A <= 0 or self.rho_max <= 0 or self.theta_max <= 0:
            raise ConfigError("A, rho_max and theta_max must be positive")
        return self


@dataclass(frozen=True)
class WorldState:
    tracker: Pose2D
    target: Pose2D
    step: int = 0


def relative_state(tracker: Pose2D, target: Pose2D) -> RelativeState:
    dx = target.x - tracker.x
    dy = target.y - tracker.y
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        return RelativeState(0.0, 0.0)
    return RelativeState(rho, wrap_angle(tracker.heading - math.atan2(dy, dx)))


def clamp_to_arena(x: float, y: float, cfg: ArenaConfig) -> tuple[float, float]:
    return min(max(x, 0.0), cfg.width), min(max(y, 0.0), cfg.height)


def step_kinematics(pose: Pose2D, cmd: ActionCommand, cfg: ArenaConfig) -> Pose2D:
    """Advance one step: rotate first, then translate along the new heading."""
    heading = wrap_angle(pose.heading + cmd.w_norm * cfg.w_max)
    dist = cmd.v_norm * cfg.v_max
    x, y = clamp_to_arena(pose.x + dist * math.cos(heading), pose.y + dist * math.sin(heading), cfg)
    return Pose2D(x, y, heading)


def spawn_episode(rng: np.random.Generator, cfg: ArenaConfig) -> WorldState:
    cfg.validate()
    tx = rng.uniform(0.0, cfg.width)
    ty = rng.uniform(0.0, cfg.height)
    heading = math.pi - rng.uniform(0.0, 2.0 * math.pi)
    radius = rng.uniform(cfg.spawn_radius_min, cfg.spawn_radius_max)
    angle = math.pi - rng.uniform(0.0, 2.0 * math.pi)
    gx, gy = clamp_to_arena(tx + radius * math.cos(angle), ty + radius * math.sin(angle), cfg)
    target_heading = math.pi - rng.uniform(0.0, 2.0 * math.pi)
    return WorldState(Pose2D(tx, ty, heading), Pose2D(gx, gy, target_heading), 0)


def spawn_in_front(rng: np.random.Generator, cfg: ArenaConfig, distance: float) -> WorldState:
    """Tracker at the arena centre with random heading, target straight ahead at ``distance``.

    The target's own heading is uniform.
    """
    cx, cy = cfg.center
    heading = math.pi - rng.uniform(0.0, 2.0 * math.pi)
    tracker = Pose2D(cx, cy, heading)
    gx, gy = clamp_to_arena(cx + distance * math.cos(heading), cy + distance * math.sin(heading), cfg)
    return WorldState(tracker, Pose2D(gx, gy, math.pi - rng.uniform(0.0, 2.0 * math.pi)), 0)


def reward(rel: RelativeState, p: RewardParams) -> float:
    r_rho = max(0.0, 1.0 - abs(rel.rho - p.rho_star) / p.rho_max)
    r_theta = max(0.0, 1.0 - abs(rel.theta - p.theta_star) / p.theta_max)
    return p.A * r_rho * r_theta


def in_fov(rel: RelativeState, fov: float) -> bool:
    return abs(rel.theta) <= fov / 2.0


def advance(world: WorldState, tracker_cmd: ActionCommand, target_cmd: ActionCommand,
            cfg: ArenaConfig) -> WorldState:
    return replace(
        world,
        tracker=step_kinematics(world.tracker, tracker_cmd, cfg),
        target=step_kinematics(world.target, target_cmd, cfg),
        step=world.step + 1,
    )
