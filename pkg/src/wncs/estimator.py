"""Recurrent state estimator and its uniform training memory.

The estimator maps a fixed-length history of (observation, input) feature
pairs to a prediction of the current sensor measurement. It trains only on
pairs whose label was actually received (age zero), sampled uniformly.
"""

from __future__ import annotations

import numpy as np

from . import nn


class HistoryWindow:
    """Sliding window of feature vectors, oldest first, zero-padded."""

    def __init__(self, width: int, length: int):
        self._buf = np.zeros((length, width), dtype=np.float32)

    def push(self, entry: np.ndarray):
        entry = np.asarray(entry, dtype=np.float32)
        if entry.shape != (self._buf.shape[1],):
            raise ValueError(f"history entry must have width "
                             f"{self._buf.shape[1]}, got {entry.shape}")
        self._buf[:-1] = self._buf[1:]
        self._buf[-1] = entry

    def array(self) -> np.ndarray:
        return self._buf.copy()

    def reset(self):
        self._buf.fill(0.0)


class EstimatorBuffer:
    """FIFO ring of (history, measurement) pairs with uniform sampling."""

    def __init__(self, capacity: int, history_len: int, pair_dim: int,
                 obs_dim: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._hist = np.zeros((capacity, history_len, pair_dim),
                              dtype=np.float32)
        self._obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self._next = 0
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def add(self, hist: np.ndarray, obs: np.ndarray):
        self._hist[self._next] = hist
        self._obs[self._next] = obs
        self._next = (self._next + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        if self._count == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._count, size=n)
        return self._hist[idx], self._obs[idx]


class StateEstimator:
    """GRU network predicting the current measurement from history."""

    def __init__(self, obs_dim: int, pair_dim: int, history_len: int,
                 hidden_dim: int, lr: float, rng: np.random.Generator,
                 dtype=np.float32):
        self.obs_dim = obs_dim
        self.spec = nn.NetworkSpec(name="estimator", current_dim=0,
                                   step_dim=pair_dim,
                                   history_len=history_len,
                                   hidden_dim=hidden_dim, out_dim=obs_dim)
        self.params = nn.init_params(self.spec, rng, dtype=dtype)
        self.adam = nn.Adam(self.params, lr=lr)

    def predict(self, hist: np.ndarray) -> np.ndarray:
        return nn.forward_one(self.spec, self.params, None, hist)

    def train_step(self, hist_batch: np.ndarray,
                   obs_batch: np.ndarray) -> float:
        """One squared-error descent step; returns the pre-update loss."""
        batch = hist_batch.shape[0]
        pred, cache = nn.forward(self.spec, self.params, None, hist_batch)
        err = pred - obs_batch
        loss = float((err * err).sum(axis=1).mean())
        dout = (2.0 / batch) * err
        grads, _, _ = nn.backward(self.spec, self.params, cache, dout)
        self.adam.step(self.params, grads)
        return loss
