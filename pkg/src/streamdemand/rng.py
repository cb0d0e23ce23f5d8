"""Seedable, splittable random streams.

Every stochastic operation in the toolkit takes an explicit
``numpy.random.Generator``. One master seed fans out to independent child
streams via ``spawn``, so replications, chains and jobs each own a stream
and results are reproducible end to end.
"""

from __future__ import annotations

import numpy as np


def rng_from_seed(seed: int | None) -> np.random.Generator:
    """A fresh PCG64 stream. ``None`` seeds from the OS (non-reproducible)."""
    return np.random.default_rng(seed)


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """n independent child streams of ``rng``; advances the parent's spawn key."""
    if n < 0:
        raise ValueError("cannot spawn a negative number of streams")
    return list(rng.spawn(n))
