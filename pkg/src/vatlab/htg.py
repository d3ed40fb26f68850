"""Heuristic trajectory generator: a privileged proportional tracking controller.

It reads the ground-truth bearing and distance, turns toward the target, and only
drives once the target is roughly centred. The turn direction uses the sign of the
raw bearing, which is only correct for a zero desired bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from vatlab.sim import ActionCommand, ConfigError, RelativeState


@dataclass(frozen=True)
class HtgParams:
    fov: float = math.radians(90.0)
    rho_star: float = 50.0
    rho_max: float = 20.0
    theta_star: float = 0.0
    theta_align_gate: float = math.radians(10.0)

    def validate(self) -> HtgParams:
        if self.fov <= 0 or self.rho_max <= 0 or self.theta_align_gate <= 0:
            raise ConfigError("fov, rho_max and theta_align_gate must be positive")
        return self


@dataclass(frozen=True)
class NoiseConfig:
    mu: float = 0.0
    sigma: float = 0.5

    def validate(self) -> NoiseConfig:
        if self.sigma < 0:
            raise ConfigError(f"noise sigma must be >= 0, got {self.sigma}")
        return self


def _sign(x: float) -> float:
    return float((x > 0) - (x < 0))


def htg_policy(rel: RelativeState, p: HtgParams) -> ActionCommand:
    dtheta = abs(rel.theta - p.theta_star)
    # bearings are clockwise-positive, turns counter-clockwise-positive
    w = -min(2.0 * dtheta / p.fov, 1.0) * _sign(rel.theta)
    v = 0.0
    if dtheta < p.theta_align_gate:
        v = min(abs(rel.rho - p.rho_star) / p.rho_max, 1.0) * _sign(rel.rho - p.rho_star)
    return ActionCommand(v, w)


def noise_sample(noise: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """One independent Gaussian perturbation per action component (before clamping)."""
    return rng.normal(noise.mu, noise.sigma, 2)


def add_noise(cmd: ActionCommand, noise: NoiseConfig, rng: np.random.Generator) -> ActionCommand:
    if noise.sigma == 0.0 and noise.mu == 0.0:
        return cmd
    eps = noise_sample(noise, rng)
    return ActionCommand(cmd.v_norm + eps[0], cmd.w_norm + eps[1])


def htg_noisy(rel: RelativeState, p: HtgParams, noise: NoiseConfig, rng: np.random.Generator) -> ActionCommand:
    return add_noise(htg_policy(rel, p), noise, rng)
