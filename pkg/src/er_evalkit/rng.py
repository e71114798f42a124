"""Deterministic pseudo-random streams for fixture generation.

The generator is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit counter
advanced by a fixed odd constant, finalized through an avalanche mix. It is
explicitly specified here, depends only on integer arithmetic, and therefore
produces the same stream on every platform and in any implementation that
follows the same recipe. Named substreams are derived by mixing the master
seed with an FNV-1a hash of the stream label, so independent generation
stages (catalog, queries, matcher noise, click log) never share state.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def derive_seed(seed: int, label: str) -> int:
    """Split one master seed into an independent per-stream seed."""
    return _mix64((seed & _MASK64) ^ _fnv1a64(label))


class SplitMix64:
    """Seeded stream of uniform 64-bit words plus the derived draws we need."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is < n / 2**64."""
        if n <= 0:
            raise ValueError("randrange() requires n >= 1")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError("randint() requires lo <= hi")
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller transform; consumes exactly two uniforms per draw."""
        u1 = self.random()
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        return mu + sigma * radius * math.cos(2.0 * math.pi * u2)
