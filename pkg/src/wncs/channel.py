"""Finite-state Markov fading channels with per-state packet dropout.

Transition matrices are row-stochastic: entry [i][j] is the probability of
moving from state i to state j. Each state carries a packet drop probability;
a transmission attempt in state i succeeds with probability 1 - drop[i].
A single-state chain degrades to a static erasure channel.
"""

from __future__ import annotations

import numpy as np

SLOW_SWITCHING = np.array([[0.7, 0.3], [0.3, 0.7]])
FAST_SWITCHING = np.array([[0.3, 0.7], [0.7, 0.3]])


def _validate(transition: np.ndarray, drop: np.ndarray):
    if transition.ndim != 2 or transition.shape[0] != transition.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape "
                         f"{transition.shape}")
    if np.any(transition < 0) or np.any(transition > 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    row_sums = transition.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9):
        raise ValueError(f"transition rows must sum to 1, got {row_sums}")
    if drop.shape != (transition.shape[0],):
        raise ValueError("need one drop probability per channel state")
    if np.any(drop < 0) or np.any(drop > 1):
        raise ValueError("drop probabilities must lie in [0, 1]")


class MarkovChannel:
    """Markov chain over fading states, advanced once per slot."""

    def __init__(self, transition, drop, state: int = 0):
        self.transition = np.asarray(transition, dtype=np.float64)
        self.drop = np.asarray(drop, dtype=np.float64)
        _validate(self.transition, self.drop)
        self.n_states = self.transition.shape[0]
        if not (0 <= state < self.n_states):
            raise ValueError(f"initial state {state} out of range")
        self.state = state
        self._cum = np.cumsum(self.transition, axis=1)

    def advance(self, rng: np.random.Generator) -> int:
        """Draw the next fading state and make it current."""
        u = rng.random()
        self.state = int(np.searchsorted(self._cum[self.state], u,
                                         side="right"))
        if self.state >= self.n_states:  # guard u == 1.0 round-off
            self.state = self.n_states - 1
        return self.state

    def draw_success(self, rng: np.random.Generator) -> bool:
        """Bernoulli delivery outcome for the current state."""
        return rng.random() >= self.drop[self.state]

    def dropout(self) -> float:
        """Drop probability of the current state."""
        return float(self.drop[self.state])

    def clone(self) -> "MarkovChannel":
        return MarkovChannel(self.transition, self.drop, self.state)


def static_channel(drop_prob: float) -> MarkovChannel:
    """Single-state channel with a fixed drop probability."""
    return MarkovChannel(np.ones((1, 1)), np.array([drop_prob]))


def stationary_distribution(transition, tol: float = 1e-12,
                            max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix by power iteration."""
    p = np.asarray(transition, dtype=np.float64)
    _validate(p, np.zeros(p.shape[0]))
    v = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(max_iter):
        v_next = v @ p
        v_next /= v_next.sum()
        if np.abs(v_next - v).max() < tol:
            return v_next
        v = v_next
    raise RuntimeError("power iteration did not converge")
