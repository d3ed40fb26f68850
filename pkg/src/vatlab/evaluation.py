"""Tracking metrics, scenario runner and the independent log re-scorer.

Per step, the target counts as visible when it is inside the field of view (edge
included) and strictly closer than ``rho_bound`` to the desired distance; outside
that region every score is 0.
Aggregation is the mean over steps of a run, then the mean over runs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from vatlab.behaviors import BehaviorSpec, BehaviorState, format_scenario, target_action
from vatlab.htg import HtgParams, NoiseConfig, htg_noisy, htg_policy
from vatlab.nets import ActorRunner, NetConfig
from vatlab.observe import ObservationMode, SceneRandomization, observe, randomize_scene
from vatlab.sim import (
    ActionCommand,
    ArenaConfig,
    RelativeState,
    WorldState,
    advance,
    relative_state,
    spawn_in_front,
)

METRICS = ("p_rho", "p_theta", "p_c", "p_v")


@dataclass(frozen=True)
class MetricParams:
    rho_star: float = 50.0
    theta_star: float = 0.0
    fov: float = math.radians(90.0)
    rho_bound: float = 150.0


@dataclass(frozen=True)
class StepScore:
    p_rho: float
    p_theta: float
    p_c: float
    p_v: float


def step_scores(rel: RelativeState, p: MetricParams) -> StepScore:
    d_rho = abs(rel.rho - p.rho_star)
    d_theta = abs(rel.theta - p.theta_star)
    if d_theta > p.fov / 2.0 or d_rho >= p.rho_bound:
        return StepScore(0.0, 0.0, 0.0, 0.0)
    p_rho = max(0.0, 1.0 - d_rho / p.rho_bound)
    p_theta = max(0.0, 1.0 - 2.0 * d_theta / p.fov)
    p_c = (p_rho + p_theta) / 2.0
    return StepScore(p_rho, p_theta, p_c, 1.0 if p_c > 0.0 else 0.0)


@dataclass
class RunReport:
    scenario: str
    policy: str
    runs: int
    steps: int
    per_run: list[dict[str, float]]
    means: dict[str, float]
    logs: list[list[dict]] = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {"policy": self.policy, "scenario": self.scenario, "runs": self.runs, "steps": self.steps,
                **{k: self.means[k] for k in METRICS}}


def aggregate(per_run_sums: Sequence[Mapping[str, float]], steps: int) -> tuple[list[dict], dict]:
    per_run = [{k: sums[k] / steps for k in METRICS} for sums in per_run_sums]
    total = {k: 0.0 for k in METRICS}
    for run in per_run:
        for k in METRICS:
            total[k] += run[k]
    return per_run, {k: total[k] / len(per_run) for k in METRICS}


# ------------------------------------------------------------------- policies

class Policy(Protocol):
    name: str
    needs_obs: bool

    def reset(self, rng: np.random.Generator) -> None: ...

    def act(self, obs: np.ndarray | None, rel: RelativeState) -> ActionCommand: ...


class HtgPolicy:
    needs_obs = False

    def __init__(self, params: HtgParams = HtgParams(), noise: NoiseConfig | None = None):
        self.params = params
        self.noise = noise
        self.name = "htg" if noise is None else "htg-noisy"
        self.rng = np.random.default_rng(0)

    def reset(self, rng):
        self.rng = rng

    def act(self, obs, rel):
        if self.noise is None:
            return htg_policy(rel, self.params)
        return htg_noisy(rel, self.params, self.noise, self.rng)


class RandomPolicy:
    name = "random"
    needs_obs = False

    def __init__(self):
        self.rng = np.random.default_rng(0)

    def reset(self, rng):
        self.rng = rng

    def act(self, obs, rel):
        v, w = self.rng.uniform(-1.0, 1.0, 2)
        return ActionCommand(v, w)


class StationaryPolicy:
    name = "stationary"
    needs_obs = False

    def reset(self, rng):
        pass

    def act(self, obs, rel):
        return ActionCommand(0.0, 0.0)


class LearnedPolicy:
    """Deterministic actor (no exploration noise) with its recurrent state carried across steps."""

    needs_obs = True

    def __init__(self, actor_params: Mapping[str, np.ndarray], net_cfg: NetConfig, name: str = "learned"):
        self.runner = ActorRunner(actor_params, net_cfg)
        self.name = name

    def reset(self, rng):
        self.runner.reset()

    def act(self, obs, rel):
        head = self.runner(obs)
        return ActionCommand(float(head[0]), float(head[1]))


# ------------------------------------------------------------------- runner

def _pose(p) -> list[float]:
    return [p.x, p.y, p.heading]


def run_scenario(policy: Policy, scenario: BehaviorSpec, runs: int = 20, steps: int = 250, seed: int = 0,
                 arena: ArenaConfig = ArenaConfig(), metric: MetricParams | None = None,
                 obs_mode: ObservationMode = ObservationMode(), keep_logs: bool = True) -> RunReport:
    """Run ``runs`` episodes with the target spawned straight ahead at the desired distance."""
    if runs <= 0 or steps <= 0:
        raise ValueError("runs and steps must be positive")
    metric = metric or MetricParams(fov=arena.fov)
    scenario.validate(arena)
    sums_per_run, logs = [], []
    for run in range(runs):
        spawn_rng, target_rng, policy_rng, obs_rng = (
            np.random.default_rng(s) for s in np.random.SeedSequence([seed, run]).spawn(4))
        world = spawn_in_front(spawn_rng, arena, metric.rho_star)
        scene = randomize_scene(obs_rng) if obs_mode.kind == "raster" else SceneRandomization()
        bstate = BehaviorState()
        policy.reset(policy_rng)
        sums = {k: 0.0 for k in METRICS}
        log = []
        for t in range(1, steps + 1):
            rel = relative_state(world.tracker, world.target)
            obs = observe(world, obs_mode, scene, arena, obs_rng, metric.rho_star) if policy.needs_obs else None
            cmd = policy.act(obs, rel)
            tcmd, bstate = target_action(scenario, bstate, world, target_rng, arena)
            world = advance(world, cmd, tcmd, arena)
            rel = relative_state(world.tracker, world.target)
            score = step_scores(rel, metric)
            for k in METRICS:
                sums[k] += getattr(score, k)
            if keep_logs:
                log.append({"run": run, "step": t, "tracker": _pose(world.tracker), "target": _pose(world.target),
                            "rho": rel.rho, "theta": rel.theta, "action": [cmd.v_norm, cmd.w_norm],
                            **asdict(score)})
        sums_per_run.append(sums)
        logs.append(log)
    per_run, means = aggregate(sums_per_run, steps)
    return RunReport(format_scenario(scenario), policy.name, runs, steps, per_run, means,
                     logs if keep_logs else [])


# ------------------------------------------------------------------- oracle

def metrics_oracle(logs: Sequence[Sequence[Mapping]], metric: MetricParams = MetricParams()) -> RunReport:
    """Re-score runs from logged poses alone, ignoring every logged score."""
    if not logs or any(len(run) == 0 for run in logs):
        raise ValueError("empty trajectory log")
    steps = len(logs[0])
    if any(len(run) != steps for run in logs):
        raise ValueError("runs have different lengths")
    two_pi = 2.0 * math.pi
    run_means = []
    for run in logs:
        acc = [0.0, 0.0, 0.0, 0.0]
        for rec in run:
            tx, ty, th = rec["tracker"]
            gx, gy, _ = rec["target"]
            dist = math.hypot(gx - tx, gy - ty)
            if dist == 0.0:
                bearing = 0.0
            else:
                bearing = math.pi - (math.pi - (th - math.atan2(gy - ty, gx - tx))) % two_pi
                if bearing <= -math.pi:
                    bearing = math.pi
            off_d = abs(dist - metric.rho_star)
            off_b = abs(bearing - metric.theta_star)
            if off_b <= metric.fov / 2.0 and off_d < metric.rho_bound:
                a = max(0.0, 1.0 - off_d / metric.rho_bound)
                b = max(0.0, 1.0 - 2.0 * off_b / metric.fov)
                c = (a + b) / 2.0
                vals = (a, b, c, 1.0 if c > 0.0 else 0.0)
            else:
                vals = (0.0, 0.0, 0.0, 0.0)
            for i in range(4):
                acc[i] += vals[i]
        run_means.append([s / steps for s in acc])
    grand = [0.0, 0.0, 0.0, 0.0]
    for m in run_means:
        for i in range(4):
            grand[i] += m[i]
    per_run = [dict(zip(METRICS, m)) for m in run_means]
    return RunReport("oracle", "oracle", len(logs), steps, per_run,
                     dict(zip(METRICS, (g / len(logs) for g in grand))))


# ------------------------------------------------------------------- output

def write_logs_jsonl(path: str | Path, logs: Iterable[Iterable[Mapping]]) -> None:
    with open(path, "w") as fh:
        for run in logs:
            for rec in run:
                fh.write(json.dumps(rec) + "\n")


def read_logs_jsonl(path: str | Path) -> list[list[dict]]:
    runs: dict[int, list[dict]] = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                runs.setdefault(rec["run"], []).append(rec)
    return [runs[k] for k in sorted(runs)]


def write_report_csv(path: str | Path, reports: Sequence[RunReport]) -> None:
    """One row per (policy, scenario) with the four metric columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["policy", "scenario", "runs", "steps", *METRICS])
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.row())


def write_table_csv(path: str | Path, reports: Sequence[RunReport]) -> None:
    """Results-table layout: one row per (scenario, metric), one column per policy."""
    policies = list(dict.fromkeys(r.policy for r in reports))
    scenarios = list(dict.fromkeys(r.scenario for r in reports))
    lookup = {(r.policy, r.scenario): r for r in reports}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "metric", *policies])
        for sc in scenarios:
            for m in METRICS:
                writer.writerow([sc, m, *(
                    f"{lookup[(p, sc)].means[m]:.4f}" if (p, sc) in lookup else "" for p in policies)])
