"""Deterministic seed hierarchy (base seed -> drop seed -> trial seed).

Child seeds are produced by folding each index into the parent with the
SplitMix64 finalizer::

    state = parent
    for i in indices:
        state = splitmix64(state ^ splitmix64(i + 0x9E3779B97F4A7C15))

All arithmetic is modulo 2**64, so any implementation with 64-bit unsigned
integers reproduces the same streams.  The resulting 64-bit value seeds a
``numpy.random.Generator`` (PCG64).
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base, *indices):
    """Mix ``indices`` into ``base`` and return a child 64-bit seed."""
    state = int(base) & MASK64
    for i in indices:
        state = splitmix64(state ^ splitmix64((int(i) + GOLDEN) & MASK64))
    return state


def rng(seed, *indices):
    """Generator seeded by ``derive_seed(seed, *indices)``."""
    return np.random.default_rng(derive_seed(seed, *indices))
