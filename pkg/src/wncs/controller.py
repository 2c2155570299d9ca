"""Deterministic-policy controller with twin critics.

The actor maps (current observation features, history window) to an action
in [-1, 1] per dimension, scaled to actuator units by the caller. Critics
take the action concatenated onto the current observation. Bootstrap targets
use the minimum of the twin target critics at the target actor's action;
a config switch ("literal" mode) bootstraps from the online networks
instead. Critic regression is importance-weighted; the actor ascends the
weighted value of critic 1 every update; target networks move by Polyak
averaging every n_target updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


def expected_reward(reward_fn, o_tilde: np.ndarray, action: np.ndarray,
                    drop_prob: float) -> float:
    """Two-point average of the reward over the downlink outcome.

    With drop probability d, the actuator applies `action` w.p. 1-d and zero
    input w.p. d; the reward is evaluated at the estimated state o_tilde.
    """
    if not (0.0 <= drop_prob <= 1.0):
        raise ValueError(f"drop probability must lie in [0, 1], got "
                         f"{drop_prob}")
    zero = np.zeros_like(action)
    return ((1.0 - drop_prob) * reward_fn(o_tilde, action)
            + drop_prob * reward_fn(o_tilde, zero))


@dataclass
class ControllerBatch:
    """Stacked controller transitions."""

    obs: np.ndarray        # [B, obs_dim]
    hist: np.ndarray       # [B, L, pair_dim]
    act: np.ndarray        # [B, act_dim], normalized
    reward: np.ndarray     # [B]
    obs_next: np.ndarray
    hist_next: np.ndarray


def stack_controller_batch(items) -> ControllerBatch:
    return ControllerBatch(
        obs=np.stack([it.obs for it in items]),
        hist=np.stack([it.hist for it in items]),
        act=np.stack([it.act for it in items]),
        reward=np.array([it.reward for it in items], dtype=np.float32),
        obs_next=np.stack([it.obs_next for it in items]),
        hist_next=np.stack([it.hist_next for it in items]),
    )


class Td3Controller:
    def __init__(self, obs_dim: int, act_dim: int, history_len: int,
                 hidden_dim: int, gamma: float, tau: float, n_target: int,
                 lr_actor: float, lr_critic: float, expl_std: float,
                 rng: np.random.Generator, dtype=np.float32,
                 use_target_networks: bool = True,
                 policy_noise: float = 0.0, noise_clip: float = 0.0):
        pair_dim = obs_dim + act_dim
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.gamma = gamma
        self.tau = tau
        self.n_target = n_target
        self.expl_std = expl_std
        self.use_target_networks = use_target_networks
        self.policy_noise = policy_noise
        self.noise_clip = noise_clip
        self.actor_spec = nn.NetworkSpec(
            name="actor", current_dim=obs_dim, step_dim=pair_dim,
            history_len=history_len, hidden_dim=hidden_dim, out_dim=act_dim,
            out_activation="tanh")
        self.critic_spec = nn.NetworkSpec(
            name="critic", current_dim=obs_dim + act_dim, step_dim=pair_dim,
            history_len=history_len, hidden_dim=hidden_dim, out_dim=1)
        self.actor = nn.init_params(self.actor_spec, rng, dtype=dtype)
        self.critic1 = nn.init_params(self.critic_spec, rng, dtype=dtype)
        self.critic2 = nn.init_params(self.critic_spec, rng, dtype=dtype)
        self.actor_target = nn.clone_params(self.actor)
        self.critic1_target = nn.clone_params(self.critic1)
        self.critic2_target = nn.clone_params(self.critic2)
        self.adam_actor = nn.Adam(self.actor, lr=lr_actor)
        self.adam_critic1 = nn.Adam(self.critic1, lr=lr_critic)
        self.adam_critic2 = nn.Adam(self.critic2, lr=lr_critic)
        self.updates = 0

    def act(self, obs: np.ndarray, hist: np.ndarray,
            rng: np.random.Generator | None = None,
            explore: bool = False) -> np.ndarray:
        """Policy output in [-1, 1]; adds clipped Gaussian noise if exploring."""
        y = nn.forward_one(self.actor_spec, self.actor, obs, hist)
        if explore:
            if rng is None:
                raise ValueError("exploration requires an RNG")
            y = np.clip(y + self.expl_std * rng.standard_normal(self.act_dim),
                        -1.0, 1.0)
        return y.astype(np.float32)

    def q1_value(self, obs: np.ndarray, hist: np.ndarray,
                 act: np.ndarray) -> float:
        """Critic-1 value of a (state, action) pair; action normalized."""
        cur = np.concatenate([obs, act]).astype(np.float32)
        return float(nn.forward_one(self.critic_spec, self.critic1, cur,
                                    hist)[0])

    def compute_targets(self, batch: ControllerBatch,
                        rng: np.random.Generator | None = None) -> np.ndarray:
        """Bootstrap targets r + gamma * min of the twin critics."""
        if self.use_target_networks:
            actor_p, c1_p, c2_p = (self.actor_target, self.critic1_target,
                                   self.critic2_target)
        else:
            actor_p, c1_p, c2_p = self.actor, self.critic1, self.critic2
        a_next, _ = nn.forward(self.actor_spec, actor_p, batch.obs_next,
                               batch.hist_next)
        if self.policy_noise > 0.0:
            if rng is None:
                raise ValueError("policy smoothing requires an RNG")
            noise = np.clip(
                self.policy_noise * rng.standard_normal(a_next.shape),
                -self.noise_clip, self.noise_clip)
            a_next = np.clip(a_next + noise, -1.0, 1.0)
        cur_next = np.concatenate([batch.obs_next,
                                   a_next.astype(batch.obs_next.dtype)],
                                  axis=1)
        q1, _ = nn.forward(self.critic_spec, c1_p, cur_next, batch.hist_next)
        q2, _ = nn.forward(self.critic_spec, c2_p, cur_next, batch.hist_next)
        return batch.reward + self.gamma * np.minimum(q1[:, 0], q2[:, 0])

    def update(self, batch: ControllerBatch, weights: np.ndarray,
               rng: np.random.Generator | None = None):
        """One critic step on each twin plus one actor step.

        Returns (td1, critic_loss): critic-1 TD errors before its update and
        the weighted critic-1 loss.
        """
        b = batch.obs.shape[0]
        w = np.asarray(weights, dtype=batch.obs.dtype)
        y = self.compute_targets(batch, rng=rng)
        cur = np.concatenate([batch.obs, batch.act], axis=1)

        td1 = None
        critic_loss = 0.0
        for i, (params, adam) in enumerate(
                ((self.critic1, self.adam_critic1),
                 (self.critic2, self.adam_critic2))):
            pred, cache = nn.forward(self.critic_spec, params, cur,
                                     batch.hist)
            td = pred[:, 0] - y
            if i == 0:
                td1 = np.asarray(td, dtype=np.float64).copy()
                critic_loss = float((w * td * td).mean())
            dout = ((2.0 / b) * w * td)[:, None]
            grads, _, _ = nn.backward(self.critic_spec, params, cache, dout)
            adam.step(params, grads)

        # actor ascent on the weighted critic-1 value at the policy action
        a_pred, actor_cache = nn.forward(self.actor_spec, self.actor,
                                         batch.obs, batch.hist)
        cur_pi = np.concatenate([batch.obs,
                                 a_pred.astype(batch.obs.dtype)], axis=1)
        _, q_cache = nn.forward(self.critic_spec, self.critic1, cur_pi,
                                batch.hist)
        dq = np.full((b, 1), -1.0 / b, dtype=batch.obs.dtype) * w[:, None]
        _, dcur, _ = nn.backward(self.critic_spec, self.critic1, q_cache, dq)
        dact = dcur[:, self.obs_dim:]
        agrads, _, _ = nn.backward(self.actor_spec, self.actor, actor_cache,
                                   dact)
        self.adam_actor.step(self.actor, agrads)

        self.updates += 1
        if self.updates % self.n_target == 0:
            nn.polyak_update(self.actor_target, self.actor, self.tau)
            nn.polyak_update(self.critic1_target, self.critic1, self.tau)
            nn.polyak_update(self.critic2_target, self.critic2, self.tau)
        return td1, critic_loss
