"""Rank-based prioritized replay with age-of-information ranking values.

New transitions enter at rank 1 (the front). Sampling draws rank k with
probability proportional to k^(-alpha), with replacement, and returns
importance weights. Each stored item carries a ranking value

    V = -I + 2 * (sigmoid(td^2) - 1/2)

where I is the transition's age-of-information and td its last sampled
temporal-difference error; V lives in [-I, -I + 1), so fresher information
dominates and the TD term breaks ties within one age level. Only sampled
items get their value refreshed. A periodic resort orders the buffer by
descending value (newer item first on ties); between resorts, ranks reflect
insertion order. When full, the tail (worst rank) is evicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def ranking_value(aoi: int, td: float) -> float:
    """Ranking value of a transition with age sum `aoi` and TD error `td`."""
    if aoi < 0:
        raise ValueError(f"transition age must be >= 0, got {aoi}")
    sig = 0.5 * (math.tanh(0.5 * td * td) + 1.0)
    return -float(aoi) + 2.0 * (sig - 0.5)


@dataclass
class _Record:
    uid: int
    item: object
    value: float
    aoi: int


class RankedBuffer:
    """Fixed-capacity replay memory ordered by rank (1 = front)."""

    def __init__(self, capacity: int, alpha: float = 1.0,
                 weight_mode: str = "max"):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if not (0.0 < alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if weight_mode not in ("max", "raw"):
            raise ValueError(f"unknown weight mode {weight_mode!r}")
        self.capacity = capacity
        self.alpha = alpha
        self.weight_mode = weight_mode
        self._slots: list[_Record | None] = [None] * capacity
        self._head = 0
        self._count = 0
        self._next_uid = 0
        self._by_uid: dict[int, _Record] = {}
        # cumulative sum of k^-alpha, grown as the buffer fills
        self._cum = np.zeros(0)

    def __len__(self) -> int:
        return self._count

    def _phys(self, rank0: int) -> int:
        return (self._head + rank0) % self.capacity

    def _grow_cum(self, n: int):
        if self._cum.size >= n:
            return
        start = self._cum.size
        ks = np.arange(start + 1, n + 1, dtype=np.float64)
        tail = np.cumsum(ks ** -self.alpha)
        base = self._cum[-1] if start else 0.0
        self._cum = np.concatenate([self._cum, base + tail])

    def insert_front(self, item, aoi: int) -> int:
        """Store `item` at rank 1 with initial value -aoi; returns its uid."""
        rec = _Record(self._next_uid, item, ranking_value(aoi, 0.0), aoi)
        self._next_uid += 1
        self._head = (self._head - 1) % self.capacity
        if self._count == self.capacity:
            evicted = self._slots[self._head]
            del self._by_uid[evicted.uid]
        else:
            self._count += 1
        self._slots[self._head] = rec
        self._by_uid[rec.uid] = rec
        self._grow_cum(self._count)
        return rec.uid

    def probabilities(self) -> np.ndarray:
        """Sampling probability per rank, front first."""
        if self._count == 0:
            raise ValueError("buffer is empty")
        weights = np.arange(1, self._count + 1,
                            dtype=np.float64) ** -self.alpha
        return weights / weights.sum()

    def sample(self, n: int, rng: np.random.Generator):
        """Rank-prioritized draw with replacement.

        Returns (items, uids, weights). Weights are 1 / (count * P(rank)),
        divided by the batch max in "max" mode.
        """
        if self._count == 0:
            raise ValueError("cannot sample from an empty buffer")
        total = self._cum[self._count - 1]
        draws = rng.random(n) * total
        rank0 = np.searchsorted(self._cum[:self._count], draws, side="right")
        rank0 = np.minimum(rank0, self._count - 1)
        ranks = rank0 + 1.0
        weights = total / (self._count * ranks ** -self.alpha)
        if self.weight_mode == "max":
            weights = weights / weights.max()
        records = [self._slots[self._phys(r)] for r in rank0]
        items = [rec.item for rec in records]
        uids = np.array([rec.uid for rec in records], dtype=np.int64)
        return items, uids, weights

    def sample_uniform(self, n: int, rng: np.random.Generator):
        """Uniform draw with replacement; unit weights."""
        if self._count == 0:
            raise ValueError("cannot sample from an empty buffer")
        rank0 = rng.integers(0, self._count, size=n)
        records = [self._slots[self._phys(r)] for r in rank0]
        items = [rec.item for rec in records]
        uids = np.array([rec.uid for rec in records], dtype=np.int64)
        return items, uids, np.ones(n)

    def update_values(self, uids, tds):
        """Refresh ranking values of sampled items; evicted uids are skipped."""
        for uid, td in zip(uids, tds):
            rec = self._by_uid.get(int(uid))
            if rec is not None:
                rec.value = ranking_value(rec.aoi, float(td))

    def resort(self):
        """Order by descending value; newer item wins ties."""
        records = [self._slots[self._phys(i)] for i in range(self._count)]
        records.sort(key=lambda rec: (-rec.value, -rec.uid))
        for i, rec in enumerate(records):
            self._slots[i] = rec
        for i in range(self._count, self.capacity):
            self._slots[i] = None
        self._head = 0

    def front_to_back(self):
        """Records in rank order (for inspection and tests)."""
        return [self._slots[self._phys(i)] for i in range(self._count)]
