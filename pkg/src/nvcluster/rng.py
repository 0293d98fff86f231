"""Seeded, splittable random streams.

All stochastic routines take an explicit ``seed`` which may be an int, a
``numpy.random.SeedSequence`` or an existing ``numpy.random.Generator``.
Streams are PCG64 generators derived through ``SeedSequence`` so child
streams are statistically independent and reproducible.
"""
from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

GENERATOR_NAME = "PCG64"


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed: SeedLike, n: int) -> list[np.random.Generator]:
    """Split ``seed`` into ``n`` independent child generators."""
    if isinstance(seed, np.random.Generator):
        return list(seed.spawn(n))
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seed.spawn(n)]
