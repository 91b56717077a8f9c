"""Seeded random streams and an order-preserving thread map.

Replicate ``i`` of any Monte Carlo loop draws from a stream derived from
``(seed, i)`` alone, so results do not depend on how work is split across
threads.
"""

import os
import secrets
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "DBREG_THREADS"


def resolve_threads(threads=None):
    if threads in (None, "auto"):
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else (os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def fresh_seed():
    """A 64-bit seed drawn from system entropy."""
    return secrets.randbits(64)


def as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        seed = fresh_seed()
    return np.random.SeedSequence(int(seed))


def substream(seed, *key):
    """Child seed sequence for ``key`` below ``seed``, independent of call order."""
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + tuple(key))


def generator(seed, *key):
    return np.random.default_rng(substream(seed, *key))


def pmap(func, items, threads=None):
    """``[func(x) for x in items]``, optionally on a thread pool."""
    items = list(items)
    threads = min(resolve_threads(threads), max(len(items), 1))
    if threads == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def blocks(total, size):
    """Split ``range(total)`` into ``(block_index, start, stop)`` triples."""
    return [(j, s, min(s + size, total)) for j, s in enumerate(range(0, total, size))]
