"""Labeled RNG streams derived from one master seed.

Every stochastic subsystem (plant noise, each channel, exploration, replay
sampling, initialization, evaluation) owns a stream keyed by a string label,
so changing how many draws one subsystem makes never perturbs the others.
That keeps paired-seed comparisons across experiment variants honest.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator for (master seed, label)."""
    seq = np.random.SeedSequence([master_seed & 0xFFFFFFFFFFFFFFFF,
                                  _label_key(label)])
    return np.random.default_rng(seq)
