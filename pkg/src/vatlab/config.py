"""Run configuration: one flat, versioned JSON document with explicit units.

Angles are stored in degrees in files (``*_deg`` keys) and converted to radians
when the module dataclasses are built. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from vatlab.ddpg.trainer import TrainConfig
from vatlab.evaluation import MetricParams
from vatlab.htg import HtgParams, NoiseConfig
from vatlab.nets import NetConfig
from vatlab.observe import ObservationMode
from vatlab.sim import ArenaConfig, ConfigError, RewardParams

SCHEMA_VERSION = 1

# Reference hyper-parameters plus the simulator and network choices that fill its gaps.
DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "output_dir": "runs/default",
    # arena
    "arena_width_cm": 500.0,
    "arena_height_cm": 500.0,
    "spawn_radius_min_cm": 30.0,
    "spawn_radius_max_cm": 150.0,
    "fov_deg": 90.0,
    "max_speed_cm_per_step": 8.0,
    "max_rotation_deg_per_step": 8.0,
    "episode_len_steps": 250,
    # reward
    "reward_scale_A": 0.1,
    "rho_star_cm": 50.0,
    "rho_max_cm": 20.0,
    "theta_star_deg": 0.0,
    "theta_max_deg": 10.0,
    # observation / network
    "mode": "vector",
    "raster_width": 84,
    "raster_height": 84,
    "vector_noise_std": 0.0,
    "gn_groups": 8,
    "fc_in_units": 256,
    "gru_units": 256,
    "fc1_units": 200,
    "fc2_units": 100,
    "dtype": "float32",
    # training
    "gamma": 0.99,
    "tau": 0.01,
    "lr": 1e-4,
    "batch_size": 128,
    "seq_len": 5,
    "update_interval_steps": 25,
    "workers": 10,
    "episodes": 9000,
    "htg_episode_len_steps": 70,
    "replay_buffer_size": 3500,
    "mix_actor": 1,
    "mix_htg": 4,
    "use_htg": True,
    "htg_anneal_episodes": 0,
    "use_aux_loss": True,
    "actor_ascent": True,
    "threads": False,
    "checkpoint_every": 100,
    # exploration noise
    "noise_mu": 0.0,
    "noise_sigma": 0.5,
    # heuristic controller and metrics
    "htg_align_gate_deg": 10.0,
    "metric_rho_bound_cm": 150.0,
}

_BOOL_KEYS = {k for k, v in DEFAULTS.items() if isinstance(v, bool)}
_INT_KEYS = {k for k, v in DEFAULTS.items() if isinstance(v, int) and not isinstance(v, bool)}
_FLOAT_KEYS = {k for k, v in DEFAULTS.items() if isinstance(v, float)}


def _coerce(key: str, value: Any) -> Any:
    """Type-check a value (or parse it from a CLI string) against its default."""
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key in _BOOL_KEYS:
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return low in ("true", "1", "yes")
            if not isinstance(value, bool):
                raise ValueError(value)
            return value
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError(value)
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
            return out
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any] = field(default_factory=lambda: dict(DEFAULTS))

    # -- construction

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> RunConfig:
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        merged = dict(DEFAULTS)
        for src in (data, overrides or {}):
            for k, v in src.items():
                merged[k] = _coerce(k, v)
        return cls(merged).validate()

    @classmethod
    def load(cls, path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data, overrides)

    def replace(self, **overrides) -> RunConfig:
        return RunConfig.from_dict(self.values, overrides)

    def to_dict(self) -> dict[str, Any]:
        return dict(self.values)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    # -- module views

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def arena(self) -> ArenaConfig:
        v = self.values
        return ArenaConfig(v["arena_width_cm"], v["arena_height_cm"], v["spawn_radius_min_cm"],
                           v["spawn_radius_max_cm"], math.radians(v["fov_deg"]), v["max_speed_cm_per_step"],
                           math.radians(v["max_rotation_deg_per_step"]), v["episode_len_steps"])

    @property
    def reward(self) -> RewardParams:
        v = self.values
        return RewardParams(v["reward_scale_A"], v["rho_star_cm"], v["rho_max_cm"],
                            math.radians(v["theta_star_deg"]), math.radians(v["theta_max_deg"]))

    @property
    def observation(self) -> ObservationMode:
        v = self.values
        return ObservationMode(v["mode"], v["raster_width"], v["raster_height"], v["vector_noise_std"])

    @property
    def net(self) -> NetConfig:
        v = self.values
        return NetConfig(obs_kind=v["mode"], raster_height=v["raster_height"], raster_width=v["raster_width"],
                         gn_groups=v["gn_groups"], fc_in=v["fc_in_units"], gru=v["gru_units"],
                         fc1=v["fc1_units"], fc2=v["fc2_units"], dtype=v["dtype"])

    @property
    def train(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            gamma=v["gamma"], tau=v["tau"], lr=v["lr"], batch_size=v["batch_size"], seq_len=v["seq_len"],
            update_interval=v["update_interval_steps"], workers=v["workers"], episodes=v["episodes"],
            htg_episode_len=v["htg_episode_len_steps"], buffer_capacity=v["replay_buffer_size"],
            mix_ratio=(v["mix_actor"], v["mix_htg"]), use_htg=v["use_htg"],
            htg_anneal_episodes=v["htg_anneal_episodes"], use_aux=v["use_aux_loss"],
            actor_ascent=v["actor_ascent"], threads=v["threads"], checkpoint_every=v["checkpoint_every"],
        )

    @property
    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.values["noise_mu"], self.values["noise_sigma"])

    @property
    def metric(self) -> MetricParams:
        v = self.values
        return MetricParams(v["rho_star_cm"], math.radians(v["theta_star_deg"]), math.radians(v["fov_deg"]),
                            v["metric_rho_bound_cm"])

    def htg_params(self) -> HtgParams:
        v = self.values
        return HtgParams(math.radians(v["fov_deg"]), v["rho_star_cm"], v["rho_max_cm"],
                         math.radians(v["theta_star_deg"]), math.radians(v["htg_align_gate_deg"]))

    def validate(self) -> RunConfig:
        unknown = set(self.values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        self.arena.validate()
        self.reward.validate()
        self.observation.validate()
        self.net.validate()
        self.train.validate()
        self.noise.validate()
        self.htg_params().validate()
        if self.values["metric_rho_bound_cm"] <= 0:
            raise ConfigError("metric_rho_bound_cm must be positive")
        return self


def default_config(**overrides) -> RunConfig:
    return RunConfig.from_dict({}, overrides)
