"""Reproducible random streams.

Every random draw in the package goes through a Philox-4x64 generator (a
64-bit counter-based bit generator) keyed by a ``numpy.random.SeedSequence``.
Independent streams are addressed by a tuple of non-negative integers
(for instance ``(trial, graph_index)``) passed as the sequence's spawn key, so
a graph's randomness depends only on its address and never on how many
draws other streams consumed before it.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(seed: int) -> int:
    return int(seed) & _MASK64


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream addressed by ``keys`` under master ``seed``."""
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit child seed for the stream addressed by ``keys``."""
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
