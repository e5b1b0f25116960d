"""Deterministic random streams.

A stream is identified by a seed (an int or a tuple of ints) plus a tuple of
integer stream ids. The pair is hashed by ``numpy.random.SeedSequence`` into
the state of a PCG64 generator; the entropy list is prefixed with its length
so that ids of different lengths can never collide. Equal (seed, ids) give
bit-identical streams on every platform numpy supports, independently of
which process or thread draws from them.
"""
from __future__ import annotations

import os
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BadParameter

SeedLike = Union[int, Sequence[int]]

SEED_ENV = "CALIBKIT_SEED"

# purpose tags for stream ids
DATA = 1
BOOTSTRAP = 2
RESAMPLING = 3


def as_seed_tuple(seed: SeedLike) -> tuple[int, ...]:
    parts = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    out = []
    for s in parts:
        if int(s) != s or s < 0:
            raise BadParameter(f"seeds must be non-negative integers, got {s!r}")
        out.append(int(s))
    return tuple(out)


def stream(seed: SeedLike, *ids: int) -> np.random.Generator:
    entropy = list(as_seed_tuple(seed)) + [int(i) for i in ids]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([len(entropy)] + entropy)))


def default_seed(seed: Optional[int] = None) -> int:
    """``seed`` if given, else ``$CALIBKIT_SEED``, else 0."""
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV, "").strip()
    if not env:
        return 0
    try:
        return int(env)
    except ValueError:
        raise BadParameter(f"{SEED_ENV}={env!r} is not an integer") from None
