"""Scripted target motion: static, circular with random direction flips, waypoint pursuit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from vatlab.sim import ActionCommand, ArenaConfig, ConfigError, Pose2D, WorldState, relative_state

KINDS = ("static", "circular", "random_waypoint")


@dataclass(frozen=True)
class BehaviorSpec:
    kind: str = "static"
    speed: float = 0.0  # cm / step
    steering: float = 0.0  # rad / step
    switch_prob: float = 0.01
    waypoint_radius: float = 20.0  # cm

    def validate(self, cfg: ArenaConfig) -> BehaviorSpec:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown behavior kind {self.kind!r}, expected one of {KINDS}")
        if not 0.0 <= self.speed <= cfg.v_max + 1e-12:
            raise ConfigError(f"speed {self.speed} outside [0, {cfg.v_max}]")
        if not 0.0 <= self.steering <= cfg.w_max + 1e-12:
            raise ConfigError(f"steering {self.steering} outside [0, {cfg.w_max}]")
        if not 0.0 <= self.switch_prob <= 1.0:
            raise ConfigError(f"switch_prob {self.switch_prob} outside [0, 1]")
        return self

    @classmethod
    def circular(cls, speed_cm: float, steering_deg: float, switch_prob: float = 0.01) -> BehaviorSpec:
        return cls("circular", float(speed_cm), math.radians(steering_deg), switch_prob)

    @classmethod
    def waypoint(cls, speed_cm: float, steering_deg: float, waypoint_radius: float = 20.0) -> BehaviorSpec:
        return cls("random_waypoint", float(speed_cm), math.radians(steering_deg),
                   waypoint_radius=waypoint_radius)


@dataclass(frozen=True)
class BehaviorState:
    direction: int = 1
    waypoint: Pose2D | None = None


def parse_scenario(text: str) -> BehaviorSpec:
    """Parse ``static``, ``circular:<speed>:<steering>[:<switch_prob>]`` or ``waypoint:<speed>:<steering>``.

    Speeds are cm/step and steering is deg/step.
    """
    parts = text.strip().split(":")
    try:
        if parts[0] == "static" and len(parts) == 1:
            return BehaviorSpec("static")
        if parts[0] == "circular" and len(parts) in (3, 4):
            prob = float(parts[3]) if len(parts) == 4 else 0.01
            return BehaviorSpec.circular(float(parts[1]), float(parts[2]), prob)
        if parts[0] == "waypoint" and len(parts) == 3:
            return BehaviorSpec.waypoint(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"bad scenario {text!r}: {exc}") from None
    raise ConfigError(
        f"bad scenario {text!r}; expected static, circular:<speed>:<steering>:<switch_prob> "
        "or waypoint:<speed>:<steering>"
    )


def format_scenario(spec: BehaviorSpec) -> str:
    if spec.kind == "static":
        return "static"
    if spec.kind == "circular":
        return f"circular:{spec.speed:g}:{math.degrees(spec.steering):g}:{spec.switch_prob:g}"
    return f"waypoint:{spec.speed:g}:{math.degrees(spec.steering):g}"


def _sample_waypoint(rng: np.random.Generator, cfg: ArenaConfig) -> Pose2D:
    return Pose2D(rng.uniform(0.0, cfg.width), rng.uniform(0.0, cfg.height), 0.0)


def target_action(spec: BehaviorSpec, state: BehaviorState, world: WorldState,
                  rng: np.random.Generator, cfg: ArenaConfig) -> tuple[ActionCommand, BehaviorState]:
    if spec.kind == "static":
        return ActionCommand(0.0, 0.0), state

    if spec.kind == "circular":
        direction = state.direction
        if spec.switch_prob > 0.0 and rng.random() < spec.switch_prob:
            direction = -direction
        cmd = ActionCommand(spec.speed / cfg.v_max, direction * spec.steering / cfg.w_max)
        return cmd, BehaviorState(direction, state.waypoint)

    waypoint = state.waypoint
    me = world.target
    if waypoint is None or math.hypot(waypoint.x - me.x, waypoint.y - me.y) <= spec.waypoint_radius:
        waypoint = _sample_waypoint(rng, cfg)
    bearing = relative_state(me, waypoint).theta  # clockwise-positive
    turn = max(-spec.steering, min(spec.steering, -bearing))
    # slow down while facing away so the target does not orbit its waypoint
    speed = spec.speed * max(0.0, math.cos(bearing))
    return ActionCommand(speed / cfg.v_max, turn / cfg.w_max), BehaviorState(state.direction, waypoint)
