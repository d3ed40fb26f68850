"""Actor and critic networks built from autodiff ops.

Both networks share one trunk layout::

    raster: conv 16@8x8/4 -> relu -> groupnorm -> conv 32@4x4/2 -> relu -> groupnorm -> flatten
    vector: (no conv stack, the 4 features feed the next layer directly)
    fc 256 -> relu -> GRU 256 -> [critic only: concat with pi] -> fc 200 -> relu -> fc 100 -> relu

The actor ends in a 4-unit tanh head ``[pi_rho, pi_theta, rho_hat, theta_hat]``; the
critic ends in a single linear unit. The GRU output is used as-is (no activation).

Sequences are time-major: observations have shape ``(L, N, *obs_shape)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from vatlab.autodiff import (
    ParamSet,
    ShapeError,
    Tensor,
    affine,
    columns,
    concat,
    conv2d,
    conv_output_size,
    copy_params,
    flatten,
    group_norm,
    gru_cell,
    index,
    relu,
    reshape,
    stack,
    tanh,
)
from vatlab.observe import VECTOR_DIM
from vatlab.sim import ConfigError


@dataclass(frozen=True)
class NetConfig:
    obs_kind: str = "vector"
    raster_height: int = 84
    raster_width: int = 84
    conv1: tuple[int, int, int] = (16, 8, 4)  # filters, kernel, stride
    conv2: tuple[int, int, int] = (32, 4, 2)
    gn_groups: int = 8
    fc_in: int = 256
    gru: int = 256
    fc1: int = 200
    fc2: int = 100
    actor_out: int = 4
    critic_out: int = 1
    dtype: str = "float32"

    def validate(self) -> NetConfig:
        if self.obs_kind not in ("vector", "raster"):
            raise ConfigError(f"obs_kind must be 'vector' or 'raster', got {self.obs_kind!r}")
        if self.actor_out != 4 or self.critic_out != 1:
            raise ConfigError("actor head must have 4 units and critic head 1")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.obs_kind == "raster":
            for filters, _, _ in (self.conv1, self.conv2):
                if filters % self.gn_groups:
                    raise ConfigError(f"{filters} channels not divisible into {self.gn_groups} groups")
            if min(self.conv_shapes()[-1][:2]) < 1:
                raise ConfigError("raster too small for the conv stack")
        return self

    def conv_shapes(self) -> list[tuple[int, int, int]]:
        """Output (H, W, C) after each conv layer."""
        h, w = self.raster_height, self.raster_width
        shapes = []
        for filters, k, s in (self.conv1, self.conv2):
            h, w = conv_output_size(h, k, s), conv_output_size(w, k, s)
            shapes.append((h, w, filters))
        return shapes

    @property
    def trunk_in(self) -> int:
        if self.obs_kind == "vector":
            return VECTOR_DIM
        h, w, c = self.conv_shapes()[-1]
        return h * w * c

    @property
    def obs_shape(self) -> tuple[int, ...]:
        if self.obs_kind == "vector":
            return (VECTOR_DIM,)
        return (self.raster_height, self.raster_width, 3)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> NetConfig:
        d = dict(d)
        for key in ("conv1", "conv2"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def param_shapes(cfg: NetConfig, critic: bool) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    if cfg.obs_kind == "raster":
        cin = 3
        for i, (filters, k, _) in enumerate((cfg.conv1, cfg.conv2), start=1):
            shapes[f"conv{i}.K"] = (k, k, cin, filters)
            shapes[f"conv{i}.b"] = (filters,)
            shapes[f"gn{i}.gamma"] = (filters,)
            shapes[f"gn{i}.beta"] = (filters,)
            cin = filters
    H = cfg.gru
    shapes["fc_in.W"] = (cfg.trunk_in, cfg.fc_in)
    shapes["fc_in.b"] = (cfg.fc_in,)
    shapes["gru.W"] = (cfg.fc_in, 3 * H)
    shapes["gru.U"] = (H, 3 * H)
    shapes["gru.b"] = (3 * H,)
    shapes["fc1.W"] = (H + (2 if critic else 0), cfg.fc1)
    shapes["fc1.b"] = (cfg.fc1,)
    shapes["fc2.W"] = (cfg.fc1, cfg.fc2)
    shapes["fc2.b"] = (cfg.fc2,)
    out = cfg.critic_out if critic else cfg.actor_out
    shapes["head.W"] = (cfg.fc2, out)
    shapes["head.b"] = (out,)
    return shapes


def _fan_in(name: str, shape: tuple[int, ...], shapes: Mapping[str, tuple[int, ...]]) -> int:
    layer, kind = name.split(".")
    if layer.startswith("conv"):
        k = shapes[f"{layer}.K"]
        return k[0] * k[1] * k[2]
    if layer == "gru":
        return shapes["gru.W"][0] if kind == "W" else shapes["gru.U"][0]
    return shapes[f"{layer}.W"][0]


def init_params(rng: np.random.Generator, cfg: NetConfig, critic: bool) -> ParamSet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; GroupNorm scale 1, shift 0."""
    shapes = param_shapes(cfg, critic)
    params: ParamSet = {}
    for name, shape in shapes.items():
        if name.endswith(".gamma"):
            arr = np.ones(shape)
        elif name.endswith(".beta"):
            arr = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(_fan_in(name, shape, shapes))
            arr = rng.uniform(-bound, bound, shape)
        params[name] = arr.astype(cfg.dtype)
    return params


def zero_params(cfg: NetConfig, critic: bool) -> ParamSet:
    return {k: np.zeros(s, dtype=cfg.dtype) for k, s in param_shapes(cfg, critic).items()}


def leaves(params: Mapping[str, np.ndarray], requires_grad: bool = True) -> dict[str, Tensor]:
    """Wrap arrays as leaf tensors for one forward/backward pass."""
    return {k: Tensor(v, requires_grad=requires_grad, name=k) for k, v in params.items()}


def _wrap(params) -> Mapping[str, Tensor]:
    return {k: v if isinstance(v, Tensor) else Tensor(v) for k, v in params.items()}


def _trunk(p: Mapping[str, Tensor], obs: Tensor, cfg: NetConfig) -> Tensor:
    """Per-step encoder; ``obs`` is (M, *obs_shape), returns (M, fc_in)."""
    x = obs
    if cfg.obs_kind == "raster":
        for i, (_, _, stride) in enumerate((cfg.conv1, cfg.conv2), start=1):
            x = conv2d(x, p[f"conv{i}.K"], p[f"conv{i}.b"], stride)
            x = group_norm(relu(x), cfg.gn_groups, p[f"gn{i}.gamma"], p[f"gn{i}.beta"])
        x = flatten(x)
    return relu(affine(x, p["fc_in.W"], p["fc_in.b"]))


def _recurrent(p: Mapping[str, Tensor], feats: Tensor, L: int, N: int, h0) -> tuple[Tensor, Tensor]:
    h = h0 if isinstance(h0, Tensor) else Tensor(h0)
    seq = reshape(feats, (L, N, feats.shape[-1]))
    outs = []
    for t in range(L):
        h = gru_cell(index(seq, t), h, p["gru.W"], p["gru.U"], p["gru.b"])
        outs.append(h)
    return stack(outs, axis=0), h


def _check_obs(obs_seq: np.ndarray, cfg: NetConfig) -> tuple[int, int]:
    if obs_seq.ndim != 2 + len(cfg.obs_shape) or obs_seq.shape[2:] != cfg.obs_shape:
        raise ShapeError(f"{cfg.obs_kind} network input", obs_seq.shape, ("L", "N", *cfg.obs_shape))
    return obs_seq.shape[0], obs_seq.shape[1]


@dataclass
class ActorOutput:
    pi: Tensor  # (L, N, 2)
    rho_hat: Tensor  # (L, N, 1)
    theta_hat: Tensor  # (L, N, 1)
    head: Tensor  # (L, N, 4)
    hidden: Tensor  # (N, gru)


def zero_hidden(cfg: NetConfig, n: int) -> np.ndarray:
    return np.zeros((n, cfg.gru), dtype=cfg.dtype)


def actor_forward(params, obs_seq, cfg: NetConfig, h0=None) -> ActorOutput:
    p = _wrap(params)
    obs = obs_seq.data if isinstance(obs_seq, Tensor) else np.asarray(obs_seq, dtype=cfg.dtype)
    L, N = _check_obs(obs, cfg)
    feats = _trunk(p, Tensor(obs.reshape(L * N, *cfg.obs_shape)), cfg)
    hs, h_last = _recurrent(p, feats, L, N, zero_hidden(cfg, N) if h0 is None else h0)
    x = reshape(hs, (L * N, cfg.gru))
    x = relu(affine(x, p["fc1.W"], p["fc1.b"]))
    x = relu(affine(x, p["fc2.W"], p["fc2.b"]))
    head = reshape(tanh(affine(x, p["head.W"], p["head.b"])), (L, N, cfg.actor_out))
    return ActorOutput(columns(head, 0, 2), columns(head, 2, 3), columns(head, 3, 4), head, h_last)


def critic_forward(params, obs_seq, pi_seq, cfg: NetConfig, h0=None) -> Tensor:
    """Q values of shape (L, N, 1); ``pi_seq`` is (L, N, 2) and is concatenated after the GRU features."""
    p = _wrap(params)
    obs = obs_seq.data if isinstance(obs_seq, Tensor) else np.asarray(obs_seq, dtype=cfg.dtype)
    L, N = _check_obs(obs, cfg)
    pi = pi_seq if isinstance(pi_seq, Tensor) else Tensor(np.asarray(pi_seq, dtype=cfg.dtype))
    if pi.shape != (L, N, 2):
        raise ShapeError("critic policy input", pi.shape, (L, N, 2))
    feats = _trunk(p, Tensor(obs.reshape(L * N, *cfg.obs_shape)), cfg)
    hs, _ = _recurrent(p, feats, L, N, zero_hidden(cfg, N) if h0 is None else h0)
    x = concat([reshape(hs, (L * N, cfg.gru)), reshape(pi, (L * N, 2))], axis=-1)
    x = relu(affine(x, p["fc1.W"], p["fc1.b"]))
    x = relu(affine(x, p["fc2.W"], p["fc2.b"]))
    return reshape(affine(x, p["head.W"], p["head.b"]), (L, N, cfg.critic_out))


class ActorRunner:
    """Step-by-step actor evaluation with the recurrent state threaded between calls."""

    def __init__(self, params: Mapping[str, np.ndarray], cfg: NetConfig):
        self.params = _wrap(params)
        self.cfg = cfg
        self.reset()

    def reset(self) -> None:
        self.hidden = zero_hidden(self.cfg, 1)

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        """Return the 4-vector head output for a single observation."""
        out = actor_forward(self.params, np.asarray(obs, dtype=self.cfg.dtype)[None, None], self.cfg, self.hidden)
        self.hidden = out.hidden.data
        return out.head.data[0, 0]


@dataclass
class Networks:
    """The parameter sets of the asynchronous actor-critic scheme."""

    actor: ParamSet
    critic: ParamSet
    actor_target: ParamSet
    critic_target: ParamSet
    local_actors: list[ParamSet]
    local_critics: list[ParamSet]


def init_networks(rng: np.random.Generator, cfg: NetConfig, workers: int = 1) -> Networks:
    cfg.validate()
    critic = init_params(rng, cfg, critic=True)
    actor = init_params(rng, cfg, critic=False)
    return Networks(
        actor=actor,
        critic=critic,
        actor_target=copy_params(actor),
        critic_target=copy_params(critic),
        local_actors=[copy_params(actor) for _ in range(workers)],
        local_critics=[copy_params(critic) for _ in range(workers)],
    )
