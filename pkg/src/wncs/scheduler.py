"""Epsilon-greedy transmission scheduler trained by deep Q-learning.

Action 1 transmits, action 0 stays silent. The greedy action is the argmax
of the network's two outputs, with ties resolved to action 0 (no
transmission). Bootstrap targets use a hard-copied target network refreshed
every n_hard updates; "literal" mode bootstraps from the online network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


@dataclass
class SchedulerBatch:
    """Stacked scheduler transitions."""

    obs: np.ndarray        # [B, obs_dim]
    hist: np.ndarray       # [B, L, pair_dim]
    act: np.ndarray        # [B], int 0/1
    reward: np.ndarray     # [B]
    obs_next: np.ndarray
    hist_next: np.ndarray


def stack_scheduler_batch(items) -> SchedulerBatch:
    return SchedulerBatch(
        obs=np.stack([it.obs for it in items]),
        hist=np.stack([it.hist for it in items]),
        act=np.array([it.act for it in items], dtype=np.int64),
        reward=np.array([it.reward for it in items], dtype=np.float32),
        obs_next=np.stack([it.obs_next for it in items]),
        hist_next=np.stack([it.hist_next for it in items]),
    )


class DqnScheduler:
    def __init__(self, obs_dim: int, history_len: int, hidden_dim: int,
                 gamma: float, lr: float, n_hard: int, epsilon: float,
                 rng: np.random.Generator, dtype=np.float32,
                 use_target_network: bool = True):
        pair_dim = obs_dim + 1  # observation features plus the binary action
        self.obs_dim = obs_dim
        self.gamma = gamma
        self.n_hard = n_hard
        self.epsilon = epsilon
        self.use_target_network = use_target_network
        self.spec = nn.NetworkSpec(
            name="scheduler", current_dim=obs_dim, step_dim=pair_dim,
            history_len=history_len, hidden_dim=hidden_dim, out_dim=2)
        self.params = nn.init_params(self.spec, rng, dtype=dtype)
        self.target = nn.clone_params(self.params)
        self.adam = nn.Adam(self.params, lr=lr)
        self.updates = 0

    def q_values(self, obs: np.ndarray, hist: np.ndarray) -> np.ndarray:
        return nn.forward_one(self.spec, self.params, obs, hist)

    def schedule(self, obs: np.ndarray, hist: np.ndarray,
                 rng: np.random.Generator | None = None,
                 explore: bool = False) -> int:
        """Pick 0 (idle) or 1 (transmit); epsilon-greedy when exploring."""
        if explore:
            if rng is None:
                raise ValueError("exploration requires an RNG")
            if rng.random() < self.epsilon:
                return int(rng.integers(0, 2))
        q = self.q_values(obs, hist)
        return int(np.argmax(q))  # tie -> index 0, i.e. no transmission

    def update(self, batch: SchedulerBatch, weights: np.ndarray):
        """One Q-learning step; returns (td, loss) with pre-update TDs."""
        b = batch.obs.shape[0]
        w = np.asarray(weights, dtype=batch.obs.dtype)
        target_p = self.target if self.use_target_network else self.params
        q_next, _ = nn.forward(self.spec, target_p, batch.obs_next,
                               batch.hist_next)
        y = batch.reward + self.gamma * q_next.max(axis=1)
        q, cache = nn.forward(self.spec, self.params, batch.obs, batch.hist)
        sel = q[np.arange(b), batch.act]
        td = np.asarray(sel - y, dtype=np.float64).copy()
        loss = float((w * td * td).mean())
        dout = np.zeros_like(q)
        dout[np.arange(b), batch.act] = (2.0 / b) * w * (sel - y)
        grads, _, _ = nn.backward(self.spec, self.params, cache, dout)
        self.adam.step(self.params, grads)
        self.updates += 1
        if self.updates % self.n_hard == 0:
            nn.hard_copy(self.target, self.params)
        return td, loss
