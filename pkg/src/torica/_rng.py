"""Counter-seeded xoshiro256++ streams for reproducible parallel runs.

Every trajectory owns a private generator whose state is derived from
the master seed plus the run parameters via splitmix64 absorption, so
results are a pure function of (configuration, master seed, trajectory
index) no matter how work is scheduled across workers.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64


@njit(cache=True, nogil=True, inline="always")
def _splitmix64(x):
    x = (x + _U64(0x9E3779B97F4A7C15)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _U64(0xFFFFFFFFFFFFFFFF)
    return x, z ^ (z >> _U64(31))


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return ((x << k) | (x >> (_U64(64) - k))) & _U64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    """Advance a 4-word xoshiro256++ state in place, return 64 bits."""
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    result = (_rotl((s0 + s3) & _U64(0xFFFFFFFFFFFFFFFF), _U64(23)) + s0) & _U64(
        0xFFFFFFFFFFFFFFFF
    )
    t = (s1 << _U64(17)) & _U64(0xFFFFFFFFFFFFFFFF)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, _U64(45))
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return result


@njit(cache=True, nogil=True, inline="always")
def next_double(state):
    """Uniform double in [0, 1)."""
    return (next_u64(state) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True, inline="always")
def next_exponential(state, rate):
    """Exponential waiting time with the given total rate."""
    u = next_double(state)  # in [0, 1); 1-u is in (0, 1]
    return -np.log1p(-u) / rate


@njit(cache=True, nogil=True, inline="always")
def next_below(state, n):
    """Uniform integer in [0, n).  Bias is O(n * 2^-53), negligible here."""
    return int(next_double(state) * n)


def absorb(h: int, value: int) -> int:
    """Fold one 64-bit word into a running splitmix64 hash."""
    x = np.uint64((h ^ (value & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF)
    _, out = _splitmix64(x)
    return int(out)


def stream_key(master_seed: int, *parts) -> int:
    """Deterministic 64-bit key from the master seed and run labels.

    Floats are absorbed through their IEEE bit patterns, strings
    through a stable FNV-1a fold, so the key is a pure function of the
    values and never of object identity.
    """
    h = absorb(0x243F6A8885A308D3, master_seed)
    for part in parts:
        if isinstance(part, float):
            word = int(np.float64(part).view(np.uint64))
        elif isinstance(part, str):
            word = 0xCBF29CE484222325
            for b in part.encode():
                word = ((word ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        else:
            word = int(part)
        h = absorb(h, word)
    return h


def make_state(key: int) -> np.ndarray:
    """Expand a 64-bit key into a xoshiro256++ state (never all zero)."""
    state = np.empty(4, dtype=np.uint64)
    x = int(key) & 0xFFFFFFFFFFFFFFFF
    for i in range(4):
        x, out = _splitmix64(np.uint64(x))
        x = int(x)
        state[i] = out
    if not state.any():  # unreachable in practice, but the algorithm forbids 0
        state[0] = np.uint64(1)
    return state
