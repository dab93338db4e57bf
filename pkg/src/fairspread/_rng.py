"""Named random streams.

Every stochastic routine takes a ``seed`` that is either an int or a
``numpy.random.SeedSequence``. Sub-streams are derived by appending integer
tags to the spawn key, so the stream for a given (purpose, index) pair never
depends on how many other streams were drawn before it.
"""
from __future__ import annotations

import zlib

import numpy as np


def as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed))


def tag(name: str) -> int:
    return zlib.crc32(name.encode())


def substream(seed, *keys) -> np.random.SeedSequence:
    """Child sequence addressed by ``keys`` (ints or names)."""
    ss = as_seedseq(seed)
    key = tuple(k if isinstance(k, (int, np.integer)) else tag(str(k)) for k in keys)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + tuple(int(k) for k in key))


def generator(seed, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream(seed, *keys)))


def simulation_generator(seed, index: int) -> np.random.Generator:
    """Stream used by Monte Carlo realization ``index``."""
    return generator(seed, "sim", index)
