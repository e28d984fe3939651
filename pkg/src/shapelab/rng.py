"""Seeded random streams split deterministically into substreams."""

from __future__ import annotations

import numpy as np


def as_generator(seed_or_rng=None) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def spawn(seed_or_rng, k: int) -> list[np.random.Generator]:
    """k independent child generators; the i-th child depends only on the parent state and i."""
    return as_generator(seed_or_rng).spawn(int(k))
