"""Counter-style random streams: every draw is keyed, never sequential state.

A draw is addressed by (seed, *key) where the key is a short tuple of
non-negative integers (trial, step, term, ...).  Streams for distinct keys
are statistically independent Philox streams, so Monte Carlo trials can run
on any number of threads in any order and still produce identical results.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return a fresh generator for the given (seed, key) address."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def keyed_normal(seed: int, key: tuple[int, ...], scale: float) -> float:
    """One N(0, scale^2) draw addressed by (seed, key)."""
    return float(substream(seed, *key).normal(0.0, scale))
