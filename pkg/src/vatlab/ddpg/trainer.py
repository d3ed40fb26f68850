"""Asynchronous actor-critic training loop with heuristic replay seeding.

Workers each own an environment, a replay buffer, local copies of the actor and
critic, and their own random streams. Every ``update_interval`` environment steps a
worker samples windows from its buffer, computes critic gradients and actor
gradients (policy + auxiliary loss) on its local copies and hands them to the
:class:`SharedStore`, which applies Adam, soft-updates the target networks and
publishes the new parameter sets in one atomic swap. The worker then resyncs.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from vatlab.autodiff import AdamState, NonFiniteError, ParamSet, adam_step, load_params, save_bundle, soft_update, \
    split_bundle
from vatlab.ddpg.losses import actor_losses, critic_loss
from vatlab.ddpg.replay import ReplayBuffer, Trajectory, mix_schedule, sample_batch
from vatlab.env import TrackingEnv
from vatlab.htg import HtgParams, NoiseConfig, add_noise, htg_policy
from vatlab.nets import NetConfig, Networks, actor_forward, init_networks, zero_hidden
from vatlab.sim import ActionCommand, ConfigError


class DivergenceError(FloatingPointError):
    """A loss or parameter became NaN/Inf."""


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.01
    lr: float = 1e-4
    batch_size: int = 128
    seq_len: int = 5
    update_interval: int = 25
    workers: int = 10
    episodes: int = 9000
    htg_episode_len: int = 70
    buffer_capacity: int = 3500
    mix_ratio: tuple[int, int] = (1, 4)  # actor episodes : HTG episodes
    use_htg: bool = True
    htg_anneal_episodes: int = 0  # stop HTG episodes after this many episodes; 0 keeps them forever
    use_aux: bool = True
    actor_ascent: bool = True  # False reproduces the literal "minimise Q" actor objective
    threads: bool = False  # False runs workers round-robin in one thread (deterministic)
    checkpoint_every: int = 0

    def validate(self) -> TrainConfig:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        for name in ("batch_size", "seq_len", "update_interval", "workers", "episodes", "htg_episode_len",
                     "buffer_capacity"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if len(self.mix_ratio) != 2 or min(self.mix_ratio) < 0 or sum(self.mix_ratio) == 0:
            raise ConfigError(f"bad mix_ratio {self.mix_ratio}")
        if self.checkpoint_every < 0 or self.htg_anneal_episodes < 0:
            raise ConfigError("checkpoint_every and htg_anneal_episodes must be >= 0")
        return self

    @property
    def warmup_steps(self) -> int:
        return self.batch_size * self.seq_len


def episode_source(index: int, cfg: TrainConfig, local_index: int | None = None) -> str:
    """Source of global episode ``index``; the mix runs on the worker's own count ``local_index``.

    Each worker fills and samples its own buffer, so every buffer must see the 1:4 interleave.
    With a global schedule and round-robin claiming, a worker count divisible by the cycle
    length would leave some buffers with actor episodes only.
    """
    if not cfg.use_htg or cfg.mix_ratio[1] == 0:
        return "actor"
    if cfg.htg_anneal_episodes and index >= cfg.htg_anneal_episodes:
        return "actor"
    return mix_schedule(index if local_index is None else local_index, cfg.mix_ratio)


# ------------------------------------------------------------------- shared parameters

class Published(NamedTuple):
    actor: ParamSet
    critic: ParamSet
    actor_target: ParamSet
    critic_target: ParamSet
    updates: int


class SharedStore:
    """Serialises gradient application; readers always get a complete, consistent snapshot."""

    def __init__(self, nets: Networks, lr: float, tau: float, critic_lr: float | None = None):
        self.lr = lr
        self.critic_lr = critic_lr or lr
        self.tau = tau
        self._lock = threading.Lock()
        self.adam_actor = AdamState.zeros_like(nets.actor)
        self.adam_critic = AdamState.zeros_like(nets.critic)
        self._pub = Published(nets.actor, nets.critic, nets.actor_target, nets.critic_target, 0)

    def snapshot(self) -> Published:
        return self._pub

    def apply(self, critic_grads: ParamSet, actor_grads: ParamSet) -> int:
        with self._lock:
            pub = self._pub
            critic, self.adam_critic = adam_step(pub.critic, critic_grads, self.adam_critic, self.critic_lr)
            actor, self.adam_actor = adam_step(pub.actor, actor_grads, self.adam_actor, self.lr)
            for params in (critic, actor):
                if not all(np.isfinite(v).all() for v in params.values()):
                    raise DivergenceError("non-finite parameters after Adam step")
            self._pub = Published(
                actor, critic,
                soft_update(pub.actor_target, actor, self.tau),
                soft_update(pub.critic_target, critic, self.tau),
                pub.updates + 1,
            )
            return self._pub.updates

    def restore(self, pub: Published, adam_actor: AdamState, adam_critic: AdamState) -> None:
        with self._lock:
            self._pub = pub
            self.adam_actor, self.adam_critic = adam_actor, adam_critic


# ------------------------------------------------------------------- rollouts

def _clamp_action(a: np.ndarray) -> np.ndarray:
    return np.clip(a, -1.0, 1.0)


def collect_actor_episode(env: TrackingEnv, get_actor: Callable[[], ParamSet], net_cfg: NetConfig,
                          noise: NoiseConfig, rng: np.random.Generator, horizon: int,
                          on_step: Callable[[], None] | None = None) -> Trajectory:
    """Roll out the actor with additive Gaussian noise; the GRU state starts at zero."""
    obs = env.reset(horizon)
    hidden = zero_hidden(net_cfg, 1)
    observations, actions, rewards, rhos, thetas = [obs], [], [], [], []
    for _ in range(horizon):
        rel = env.rel
        out = actor_forward(get_actor(), np.asarray(obs, dtype=net_cfg.dtype)[None, None], net_cfg, hidden)
        hidden = out.hidden.data
        pi = out.pi.data[0, 0].astype(np.float64)
        cmd = add_noise(ActionCommand(*pi), noise, rng)
        obs, r, _ = env.step(cmd)
        observations.append(obs)
        actions.append((cmd.v_norm, cmd.w_norm))
        rewards.append(r)
        rhos.append(rel.rho)
        thetas.append(rel.theta)
        if on_step is not None:
            on_step()
    return _trajectory(observations, actions, rewards, rhos, thetas, "actor")


def collect_htg_episode(env: TrackingEnv, htg: HtgParams, noise: NoiseConfig, rng: np.random.Generator,
                        horizon: int, on_step: Callable[[], None] | None = None) -> Trajectory:
    obs = env.reset(horizon)
    observations, actions, rewards, rhos, thetas = [obs], [], [], [], []
    for _ in range(horizon):
        rel = env.rel
        cmd = add_noise(htg_policy(rel, htg), noise, rng)
        obs, r, _ = env.step(cmd)
        observations.append(obs)
        actions.append((cmd.v_norm, cmd.w_norm))
        rewards.append(r)
        rhos.append(rel.rho)
        thetas.append(rel.theta)
        if on_step is not None:
            on_step()
    return _trajectory(observations, actions, rewards, rhos, thetas, "htg")


def _trajectory(observations, actions, rewards, rhos, thetas, source) -> Trajectory:
    return Trajectory(np.asarray(observations), np.asarray(actions, dtype=np.float64),
                      np.asarray(rewards, dtype=np.float64), np.asarray(rhos), np.asarray(thetas), source)


# ------------------------------------------------------------------- workers

@dataclass
class Worker:
    wid: int
    env: TrackingEnv
    buffer: ReplayBuffer
    noise_rng: np.random.Generator
    sample_rng: np.random.Generator
    actor: ParamSet
    critic: ParamSet
    steps: int = 0
    episodes: int = 0
    pending: list = field(default_factory=list)


class Trainer:
    def __init__(self, run, log_path: str | Path | None = None, out_dir: str | Path | None = None,
                 critic_lr: float | None = None):
        from vatlab.config import RunConfig  # circular at import time

        self.run: RunConfig = run.validate()
        self.cfg: TrainConfig = run.train
        self.net_cfg: NetConfig = run.net
        self.noise: NoiseConfig = run.noise
        self.htg = run.htg_params()
        seq = np.random.SeedSequence(run.seed)
        init_seq, worker_seq = seq.spawn(2)
        nets = init_networks(np.random.default_rng(init_seq), self.net_cfg, self.cfg.workers)
        self.store = SharedStore(nets, self.cfg.lr, self.cfg.tau, critic_lr)
        self.workers = []
        for wid, ws in enumerate(worker_seq.spawn(self.cfg.workers)):
            env_s, noise_s, sample_s = ws.spawn(3)
            env = TrackingEnv(run.arena, run.reward, run.observation, rng=np.random.default_rng(env_s))
            self.workers.append(Worker(wid, env, ReplayBuffer(self.cfg.buffer_capacity),
                                       np.random.default_rng(noise_s), np.random.default_rng(sample_s),
                                       nets.local_actors[wid], nets.local_critics[wid]))
        self.next_episode = 0
        self.records: list[dict] = []
        self.log_path = Path(log_path) if log_path else None
        self.out_dir = Path(out_dir) if out_dir else None
        self._lock = threading.Lock()
        self._stop = threading.Event()
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)

    # -- updates

    def _update(self, w: Worker) -> None:
        cfg = self.cfg
        batch = sample_batch(w.buffer, cfg.batch_size, cfg.seq_len, w.sample_rng)
        pub = self.store.snapshot()
        try:
            lq, gq = critic_loss(batch, w.critic, pub.critic_target, pub.actor_target, cfg.gamma, self.net_cfg)
            al = actor_losses(batch, w.actor, w.critic, self.net_cfg, cfg.actor_ascent, cfg.use_aux)
        except NonFiniteError as exc:
            raise DivergenceError(str(exc)) from exc
        if not all(math.isfinite(x) for x in (lq, al.policy, al.aux)):
            raise DivergenceError(f"non-finite loss (critic={lq}, actor={al.policy}, aux={al.aux})")
        self.store.apply(gq, al.grads)
        latest = self.store.snapshot()
        w.actor, w.critic = latest.actor, latest.critic
        w.pending.append((lq, al.policy, al.aux, batch.sources.count("htg")))

    def _on_step(self, w: Worker) -> None:
        w.steps += 1
        if w.steps % self.cfg.update_interval == 0 and w.buffer.total_steps >= self.cfg.warmup_steps:
            self._update(w)

    # -- episodes

    def run_episode(self, w: Worker, index: int) -> dict:
        source = episode_source(index, self.cfg, w.episodes)
        w.episodes += 1
        hook = lambda: self._on_step(w)  # noqa: E731
        if source == "actor":
            traj = collect_actor_episode(w.env, lambda: w.actor, self.net_cfg, self.noise, w.noise_rng,
                                         self.run.arena.episode_len, hook)
        else:
            traj = collect_htg_episode(w.env, self.htg, self.noise, w.noise_rng, self.cfg.htg_episode_len, hook)
        w.buffer.add(traj)
        losses, w.pending = w.pending, []
        rec = {
            "episode": index,
            "worker": w.wid,
            "source": source,
            "steps": len(traj),
            "mean_reward": float(traj.rewards.mean()),
            "total_reward": float(traj.rewards.sum()),
            "updates": len(losses),
            "loss_q": float(np.mean([x[0] for x in losses])) if losses else None,
            "loss_pi": float(np.mean([x[1] for x in losses])) if losses else None,
            "loss_aux": float(np.mean([x[2] for x in losses])) if losses else None,
            "htg_windows": int(sum(x[3] for x in losses)),
            "shared_updates": self.store.snapshot().updates,
        }
        return rec

    def _emit(self, rec: dict) -> None:
        self.records.append(rec)
        if self.log_path is not None:
            with open(self.log_path, "a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        if self.out_dir is not None and self.cfg.checkpoint_every and \
                (rec["episode"] + 1) % self.cfg.checkpoint_every == 0:
            self.save_checkpoint(self.out_dir / "checkpoint.vatp")

    def _claim(self) -> int | None:
        with self._lock:
            if self._stop.is_set() or self.next_episode >= self.cfg.episodes:
                return None
            idx = self.next_episode
            self.next_episode += 1
            return idx

    def train(self, progress: Callable[[dict], None] | None = None) -> list[dict]:
        """Run until ``episodes`` episodes have been collected in total. Returns the episode records."""
        start = len(self.records)
        if self.cfg.threads and len(self.workers) > 1:
            self._train_threads(progress)
        else:
            self._train_interleaved(progress)
        return self.records[start:]

    def _train_interleaved(self, progress) -> None:
        while True:
            for w in self.workers:
                idx = self._claim()
                if idx is None:
                    return
                rec = self.run_episode(w, idx)
                self._emit(rec)
                if progress:
                    progress(rec)

    def _train_threads(self, progress) -> None:
        errors: list[BaseException] = []

        def loop(w: Worker):
            try:
                while (idx := self._claim()) is not None:
                    rec = self.run_episode(w, idx)
                    with self._lock:
                        self._emit(rec)
                    if progress:
                        progress(rec)
            except BaseException as exc:  # surfaced in the main thread
                errors.append(exc)
                self._stop.set()

        threads = [threading.Thread(target=loop, args=(w,), daemon=True) for w in self.workers]
        for t in threads:
            t.start()
        try:
            for t in threads:
                while t.is_alive():
                    t.join(0.2)
        except KeyboardInterrupt:
            self._stop.set()
            for t in threads:
                t.join()
            raise
        if errors:
            raise errors[0]

    def stop(self) -> None:
        self._stop.set()

    # -- persistence

    def save_checkpoint(self, path: str | Path) -> str:
        pub = self.store.snapshot()
        sets = {
            "actor": pub.actor, "critic": pub.critic,
            "actor_target": pub.actor_target, "critic_target": pub.critic_target,
            "adam_actor_m": self.store.adam_actor.m, "adam_actor_v": self.store.adam_actor.v,
            "adam_critic_m": self.store.adam_critic.m, "adam_critic_v": self.store.adam_critic.v,
        }
        meta = {
            "kind": "checkpoint",
            "episode": self.next_episode,
            "updates": pub.updates,
            "adam_actor_t": self.store.adam_actor.t,
            "adam_critic_t": self.store.adam_critic.t,
            "worker_episodes": [w.episodes for w in self.workers],
            "worker_steps": [w.steps for w in self.workers],
            "net": self.net_cfg.to_dict(),
            "config": self.run.to_dict(),
        }
        return save_bundle(path, sets, meta)

    def load_checkpoint(self, path: str | Path) -> None:
        flat, header = load_params(path)
        meta = header["meta"]
        if meta.get("kind") != "checkpoint":
            raise ConfigError(f"{path} is not a training checkpoint")
        sets = split_bundle(flat)
        pub = Published(sets["actor"], sets["critic"], sets["actor_target"], sets["critic_target"], meta["updates"])
        self.store.restore(
            pub,
            AdamState(sets["adam_actor_m"], sets["adam_actor_v"], meta["adam_actor_t"]),
            AdamState(sets["adam_critic_m"], sets["adam_critic_v"], meta["adam_critic_t"]),
        )
        counts = zip(meta.get("worker_episodes", []), meta.get("worker_steps", []))
        for w, (episodes, steps) in zip(self.workers, counts):
            w.episodes, w.steps = int(episodes), int(steps)
        for w in self.workers:
            w.actor, w.critic = pub.actor, pub.critic
        self.next_episode = int(meta["episode"])

    def save_weights(self, path: str | Path) -> str:
        pub = self.store.snapshot()
        meta = {"kind": "weights", "net": self.net_cfg.to_dict(), "episodes": self.next_episode,
                "updates": pub.updates}
        return save_bundle(path, {"actor": pub.actor, "critic": pub.critic}, meta)


def load_actor(path: str | Path) -> tuple[ParamSet, NetConfig, dict]:
    """Load the actor ParamSet and its NetConfig from a weights or checkpoint file."""
    flat, header = load_params(path)
    meta = header.get("meta", {})
    if "net" not in meta:
        raise ConfigError(f"{path} carries no network configuration")
    sets = split_bundle(flat)
    if "actor" not in sets:
        raise ConfigError(f"{path} holds no actor parameters")
    return sets["actor"], NetConfig.from_dict(meta["net"]), meta
