"""Episodic tracking environment with a reset/step interface."""

from __future__ import annotations

import numpy as np

from vatlab.behaviors import BehaviorSpec, BehaviorState, target_action
from vatlab.observe import ObservationMode, SceneRandomization, observe, randomize_scene
from vatlab.sim import (
    ActionCommand,
    ArenaConfig,
    RelativeState,
    RewardParams,
    WorldState,
    advance,
    relative_state,
    reward,
    spawn_episode,
)


class TrackingEnv:
    """One tracker/target room.

    ``reset`` spawns a new episode and, in raster mode, a new scene palette.
    ``step`` moves tracker and target and returns ``(obs, reward, rel)`` where
    ``rel`` is the ground-truth relative state after the move. Episodes end only
    on step count; ``done`` reports it.
    """

    def __init__(self, arena: ArenaConfig = ArenaConfig(), reward_params: RewardParams = RewardParams(),
                 obs_mode: ObservationMode = ObservationMode(), behavior: BehaviorSpec = BehaviorSpec(),
                 rng: np.random.Generator | None = None):
        self.arena = arena.validate()
        self.reward_params = reward_params.validate()
        self.obs_mode = obs_mode.validate()
        self.behavior = behavior.validate(arena)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.world: WorldState | None = None
        self.scene = SceneRandomization()
        self.bstate = BehaviorState()
        self.horizon = arena.episode_len

    def reset(self, horizon: int | None = None) -> np.ndarray:
        self.world = spawn_episode(self.rng, self.arena)
        self.bstate = BehaviorState()
        if self.obs_mode.kind == "raster":
            self.scene = randomize_scene(self.rng)
        self.horizon = horizon or self.arena.episode_len
        return self.observation()

    @property
    def rel(self) -> RelativeState:
        return relative_state(self.world.tracker, self.world.target)

    @property
    def done(self) -> bool:
        return self.world.step >= self.horizon

    def observation(self) -> np.ndarray:
        return observe(self.world, self.obs_mode, self.scene, self.arena, self.rng, self.reward_params.rho_star)

    def step(self, cmd: ActionCommand) -> tuple[np.ndarray, float, RelativeState]:
        if self.world is None:
            raise RuntimeError("call reset() before step()")
        tcmd, self.bstate = target_action(self.behavior, self.bstate, self.world, self.rng, self.arena)
        self.world = advance(self.world, cmd, tcmd, self.arena)
        rel = self.rel
        return self.observation(), reward(rel, self.reward_params), rel
