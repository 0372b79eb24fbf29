"""Seeded random streams.

Every simulation draws from ``numpy.random.PCG64`` seeded through a
``SeedSequence``.  Independent streams are obtained by ``SeedSequence.spawn``:
child ``i`` of seed ``s`` is ``SeedSequence(s).spawn(n)[i]``, which is
stable across platforms and numpy versions that keep PCG64.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


def split(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from ``seed``."""
    return [make_rng(c) for c in np.random.SeedSequence(seed).spawn(n)]


def spawn_seeds(master_seed: int, n: int) -> list[int]:
    """Integer seeds for ``n`` ensemble members.

    Each is the first 64-bit word of the corresponding spawned child state,
    so member ``i`` is reproducible from ``(master_seed, i)`` alone.
    """
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]
