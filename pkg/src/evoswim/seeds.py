"""Deterministic 64-bit seed derivation for sharded, reproducible runs.

The mixing function is fixed: every part is hashed through splitmix64 and
folded into a running state, also via splitmix64::

    state = splitmix64(base_seed)
    for part in parts:
        state = splitmix64(state ^ splitmix64(part))

Sweeps derive the per-trial seed as
``derive_seed(base_seed, sigma_index, cell_index, repetition_index)``, so any
shard of (cell, repetition) work can be recomputed independently and results
are invariant to scheduling.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 output step (Steele, Lea, Flood 2014 constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *parts: int) -> int:
    """Mix a base seed with integer parts into one 64-bit seed."""
    state = splitmix64(base_seed & _MASK64)
    for part in parts:
        state = splitmix64(state ^ splitmix64(part & _MASK64))
    return state
