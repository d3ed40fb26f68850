"""Per-worker trajectory replay with fixed-length window sampling."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


class InsufficientDataError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """One episode. ``observations`` has one more entry than ``actions``: o_0 .. o_T."""

    observations: np.ndarray  # (T + 1, *obs_shape)
    actions: np.ndarray  # (T, 2)
    rewards: np.ndarray  # (T,)
    true_rho: np.ndarray  # (T,) ground truth at o_t, cm
    true_theta: np.ndarray  # (T,) ground truth at o_t, rad
    source: str  # "actor" | "htg"

    def __post_init__(self):
        T = len(self.actions)
        if len(self.observations) != T + 1 or len(self.rewards) != T or len(self.true_rho) != T \
                or len(self.true_theta) != T:
            raise ValueError("trajectory arrays have inconsistent lengths")
        if self.source not in ("actor", "htg"):
            raise ValueError(f"unknown trajectory source {self.source!r}")

    def __len__(self):
        return len(self.actions)

    @property
    def next_observations(self) -> np.ndarray:
        return self.observations[1:]


@dataclass
class Batch:
    """Time-major windows: every array is (L, B, ...)."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    true_rho: np.ndarray
    true_theta: np.ndarray
    traj_index: np.ndarray  # (B,) buffer slot of each window
    start: np.ndarray  # (B,) first step of each window
    sources: list[str]

    @property
    def size(self) -> int:
        return self.actions.shape[1]

    @property
    def length(self) -> int:
        return self.actions.shape[0]


class ReplayBuffer:
    """FIFO ring of whole trajectories."""

    def __init__(self, capacity: int = 3500):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.trajectories: deque[Trajectory] = deque(maxlen=capacity)
        self.added = {"actor": 0, "htg": 0}
        self._window_len = None
        self._cum = None

    def add(self, traj: Trajectory) -> None:
        self.trajectories.append(traj)
        self.added[traj.source] += 1
        self._cum = None

    def __len__(self):
        return len(self.trajectories)

    @property
    def total_steps(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def counts(self) -> dict[str, int]:
        out = {"actor": 0, "htg": 0}
        for t in self.trajectories:
            out[t.source] += 1
        return out

    def window_counts(self, L: int) -> np.ndarray:
        if self._cum is None or self._window_len != L:
            per = np.array([max(0, len(t) - L + 1) for t in self.trajectories], dtype=np.int64)
            self._cum = np.cumsum(per)
            self._window_len = L
        return self._cum


def sample_batch(buffer: ReplayBuffer, B: int, L: int, rng: np.random.Generator) -> Batch:
    """Draw ``B`` windows of ``L`` consecutive transitions, uniform over (trajectory, start)."""
    if B <= 0 or L <= 0:
        raise ValueError("B and L must be positive")
    cum = buffer.window_counts(L)
    total = int(cum[-1]) if len(cum) else 0
    if total == 0:
        raise InsufficientDataError(f"no trajectory of length >= {L} in the buffer")
    flat = rng.integers(0, total, size=B)
    traj_idx = np.searchsorted(cum, flat, side="right")
    starts = flat - np.concatenate([[0], cum])[traj_idx]
    trajs = [buffer.trajectories[i] for i in traj_idx]
    steps = starts[:, None] + np.arange(L)[None, :]  # (B, L)

    def gather(field: str, offset: int = 0) -> np.ndarray:
        return np.stack([getattr(t, field)[s + offset] for t, s in zip(trajs, steps)], axis=1)

    return Batch(
        obs=gather("observations"),
        actions=gather("actions"),
        rewards=gather("rewards"),
        next_obs=gather("observations", 1),
        true_rho=gather("true_rho"),
        true_theta=gather("true_theta"),
        traj_index=traj_idx,
        start=starts,
        sources=[t.source for t in trajs],
    )


def mix_schedule(episode_index: int, ratio: tuple[int, int] = (1, 4)) -> str:
    """Deterministic interleave: per cycle, ``ratio[0]`` actor episodes then ``ratio[1]`` HTG episodes."""
    n_actor, n_htg = ratio
    if n_actor < 0 or n_htg < 0 or n_actor + n_htg == 0:
        raise ValueError(f"bad mix ratio {ratio}")
    return "actor" if episode_index % (n_actor + n_htg) < n_actor else "htg"
