"""Critic, actor and auxiliary losses on a batch of replay windows.

Each loss returns plain floats and a ``{name: grad}`` dict for exactly one network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from vatlab.autodiff import Tape, Tensor, add, backward, index, mean, mse, scale
from vatlab.ddpg.replay import Batch
from vatlab.nets import ActorOutput, NetConfig, actor_forward, critic_forward, leaves
from vatlab.observe import RHO_NORM


def _cast(a: np.ndarray, cfg: NetConfig) -> np.ndarray:
    return np.asarray(a, dtype=cfg.dtype)


def td_targets(batch: Batch, critic_target, actor_target, gamma: float, cfg: NetConfig) -> np.ndarray:
    """``r + gamma * Q'(o', pi'(o'))`` as a constant (L, B, 1) array."""
    next_obs = _cast(batch.next_obs, cfg)
    pi_next = actor_forward(actor_target, next_obs, cfg).pi.data
    q_next = critic_forward(critic_target, next_obs, pi_next, cfg).data
    return _cast(batch.rewards, cfg)[..., None] + gamma * q_next


def critic_loss(batch: Batch, critic: Mapping[str, np.ndarray], critic_target, actor_target, gamma: float,
                cfg: NetConfig) -> tuple[float, dict[str, np.ndarray]]:
    y = td_targets(batch, critic_target, actor_target, gamma, cfg)
    p = leaves(critic)
    with Tape() as tape:
        q = critic_forward(p, _cast(batch.obs, cfg), _cast(batch.actions, cfg), cfg)
        loss = mse(q, y)
    return float(loss.data), backward(tape, loss, p)


def normalized_targets(true_rho: np.ndarray, true_theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map ground truth to the tanh range: distance via ``clamp(rho / RHO_NORM, 0, 1) * 2 - 1``, bearing via ``theta / pi``."""
    rho = np.clip(true_rho / RHO_NORM, 0.0, 1.0) * 2.0 - 1.0
    return rho, true_theta / np.pi


def aux_loss_terms(out: ActorOutput, rho_target: np.ndarray, theta_target: np.ndarray) -> Tensor:
    """Regression to normalised ground truth plus a smoothness penalty on consecutive estimates.

    Both sums are divided by the window length L; the smoothness sum has L - 1 terms.
    Everything is also averaged over the batch.
    """
    rho_hat, theta_hat = out.rho_hat, out.theta_hat
    L = rho_hat.shape[0]
    fit = add(mse(rho_hat, rho_target[..., None]), mse(theta_hat, theta_target[..., None]))
    if L < 2:
        return fit
    later, earlier = slice(1, None), slice(None, -1)
    smooth = add(mse(index(rho_hat, later), index(rho_hat, earlier)),
                 mse(index(theta_hat, later), index(theta_hat, earlier)))
    return add(fit, scale(smooth, (L - 1) / L))


def aux_loss(batch: Batch, actor: Mapping[str, np.ndarray], cfg: NetConfig) -> tuple[float, dict[str, np.ndarray]]:
    p = leaves(actor)
    rho_t, theta_t = normalized_targets(batch.true_rho, batch.true_theta)
    with Tape() as tape:
        out = actor_forward(p, _cast(batch.obs, cfg), cfg)
        loss = aux_loss_terms(out, _cast(rho_t, cfg), _cast(theta_t, cfg))
    return float(loss.data), backward(tape, loss, p)


def _policy_objective(out: ActorOutput, critic_frozen, obs: np.ndarray, cfg: NetConfig, ascend: bool) -> Tensor:
    q = critic_forward(critic_frozen, obs, out.pi, cfg)
    return scale(mean(q), -1.0) if ascend else mean(q)


def actor_loss(batch: Batch, actor: Mapping[str, np.ndarray], critic: Mapping[str, np.ndarray], cfg: NetConfig,
               ascend: bool = True) -> tuple[float, dict[str, np.ndarray]]:
    """``-mean Q(o, pi(o))`` (or ``+mean Q`` when ``ascend`` is False); gradients reach the actor only."""
    p = leaves(actor)
    frozen = leaves(critic, requires_grad=False)
    obs = _cast(batch.obs, cfg)
    with Tape() as tape:
        out = actor_forward(p, obs, cfg)
        loss = _policy_objective(out, frozen, obs, cfg, ascend)
    return float(loss.data), backward(tape, loss, p)


@dataclass
class ActorLosses:
    policy: float
    aux: float
    grads: dict[str, np.ndarray]


def actor_losses(batch: Batch, actor: Mapping[str, np.ndarray], critic: Mapping[str, np.ndarray], cfg: NetConfig,
                 ascend: bool = True, use_aux: bool = True) -> ActorLosses:
    """Policy loss plus auxiliary loss through one shared actor forward pass; gradients of the sum."""
    p = leaves(actor)
    frozen = leaves(critic, requires_grad=False)
    obs = _cast(batch.obs, cfg)
    with Tape() as tape:
        out = actor_forward(p, obs, cfg)
        l_pi = _policy_objective(out, frozen, obs, cfg, ascend)
        total = l_pi
        l_aux = 0.0
        if use_aux:
            rho_t, theta_t = normalized_targets(batch.true_rho, batch.true_theta)
            aux = aux_loss_terms(out, _cast(rho_t, cfg), _cast(theta_t, cfg))
            l_aux = float(aux.data)
            total = add(l_pi, aux)
    return ActorLosses(float(l_pi.data), l_aux, backward(tape, total, p))
