"""Seeded pseudo-random draws with a fully specified, portable algorithm.

Everything random in this package flows through :class:`SplitMix64` so that
fixtures and golden files are bit-reproducible on any platform and can be
replayed from the algorithm description alone:

* Generator: SplitMix64 (Steele, Lea & Flood).  State advances by the odd
  constant ``0x9E3779B97F4A7C15`` modulo 2**64; each output is the new state
  passed through the xor-shift/multiply finalizer with constants
  ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``.
* Uniform doubles: the top 53 bits of one output, scaled by 2**-53, giving
  ``u`` in [0, 1).
* Categorical draws: inverse CDF.  Walk the probability vector in index
  order accumulating mass; return the first index whose cumulative sum
  exceeds ``u``.  Any residual mass from rounding (vector sums are only
  required to be within 1e-6 of one) falls to the last index.
* Sampling without replacement: partial Fisher-Yates over the pool in its
  canonical order, one uniform per pick (``j = i + floor(u * (len - i))``).
"""

from __future__ import annotations

from typing import Sequence

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; see module docstring for the layout."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Next double in [0, 1) from the top 53 bits of one output."""
        return (self.next_u64() >> 11) * 2.0**-53

    def categorical(self, probs: Sequence[float]) -> int:
        """Inverse-CDF draw from a probability vector (index order)."""
        u = self.uniform()
        acc = 0.0
        for i, p in enumerate(probs):
            acc += p
            if u < acc:
                return i
        return len(probs) - 1

    def sample_without_replacement(self, pool: Sequence, count: int) -> list:
        """First ``count`` entries of a partial Fisher-Yates shuffle of ``pool``."""
        items = list(pool)
        n = len(items)
        for i in range(count):
            j = i + int(self.uniform() * (n - i))
            items[i], items[j] = items[j], items[i]
        return items[:count]


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of UTF-8 text; used to derive seeds from strings."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h
