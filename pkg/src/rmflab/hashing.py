"""Keyed 64-bit hashing used for every source of randomness in the package.

All stochastic output is a pure function of (seed, integer label): prime
values, per-trial seeds and Gaussian draws are derived by hashing, never by
stateful generators, so results are reproducible for any execution order,
worker count or platform.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

GOLD = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

# Domain separators so that trial seeds, prime values and normal streams
# drawn from the same master seed never reuse hash inputs.
TRIAL_SALT = 0x7F4A7C15F39CC060
NORMAL_SALT = 0x2545F4914F6CDD1D

_TWO_NEG53 = 2.0 ** -53


def mix64_int(z: int) -> int:
    """SplitMix64 finalizer on a Python int (reference implementation)."""
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def hash64_int(key: int, x: int) -> int:
    """Keyed hash of label ``x`` under ``key``; scalar reference path."""
    return mix64_int(mix64_int(key + GOLD) ^ ((x * GOLD) & _MASK))


def _finalize(z: np.ndarray) -> np.ndarray:
    z ^= z >> U64(30)
    z *= U64(0xBF58476D1CE4E5B9)
    z ^= z >> U64(27)
    z *= U64(0x94D049BB133111EB)
    z ^= z >> U64(31)
    return z


def hash64_array(key: int, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`hash64_int` over a uint64 label array."""
    k = U64(mix64_int(key + GOLD))
    return _finalize(xs.astype(U64) * U64(GOLD) ^ k)


def hash64_keys(keys: np.ndarray, x: int) -> np.ndarray:
    """Vectorized :func:`hash64_int` over a uint64 key array, fixed label."""
    k = _finalize(keys.astype(U64) + U64(GOLD))
    return _finalize(k ^ U64((x * GOLD) & _MASK))


@njit(cache=True, inline="always")
def hash64_nb(key: np.uint64, x: np.uint64) -> np.uint64:  # pragma: no cover
    k = key + U64(GOLD)
    k ^= k >> U64(30)
    k *= U64(0xBF58476D1CE4E5B9)
    k ^= k >> U64(27)
    k *= U64(0x94D049BB133111EB)
    k ^= k >> U64(31)
    z = x * U64(GOLD) ^ k
    z ^= z >> U64(30)
    z *= U64(0xBF58476D1CE4E5B9)
    z ^= z >> U64(27)
    z *= U64(0x94D049BB133111EB)
    z ^= z >> U64(31)
    return z


def trial_seed(master_seed: int, index: int) -> int:
    """Per-trial seed: keyed hash of the trial index under the master seed."""
    return hash64_int(master_seed & _MASK ^ TRIAL_SALT, index)


def trial_seeds(master_seed: int, trials: int) -> np.ndarray:
    return hash64_array(master_seed & _MASK ^ TRIAL_SALT,
                        np.arange(trials, dtype=np.uint64))


def unit_fraction(h: np.ndarray) -> np.ndarray:
    """Map uint64 words to [0, 1) using the top 53 bits."""
    return (h >> U64(11)).astype(np.float64) * _TWO_NEG53


def rademacher_signs(seed: int, labels: np.ndarray) -> np.ndarray:
    """+/-1 values for each label, from the sign bit of the keyed hash."""
    bits = (hash64_array(seed, labels) >> U64(63)).astype(np.int8)
    return (1 - 2 * bits).astype(np.int8)


def steinhaus_angles(seed: int, labels: np.ndarray) -> np.ndarray:
    """Angles theta in [0, 2*pi) for each label."""
    return 2.0 * np.pi * unit_fraction(hash64_array(seed, labels))


def normal_draws(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """``count`` standard normals via Box-Muller on the keyed-hash stream.

    Draw ``j`` consumes hash labels ``2*(offset+j)`` and ``2*(offset+j)+1``,
    so disjoint offset ranges give independent, order-free streams.
    """
    idx = np.arange(offset, offset + count, dtype=np.uint64)
    key = seed & _MASK ^ NORMAL_SALT
    h1 = hash64_array(key, idx * U64(2))
    h2 = hash64_array(key, idx * U64(2) + U64(1))
    # strictly positive u1 so log() is finite
    u1 = ((h1 >> U64(11)).astype(np.float64) + 0.5) * _TWO_NEG53
    u2 = unit_fraction(h2)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
