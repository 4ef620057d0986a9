"""Seeded deterministic random stream.

The generator is part of the package's reproducibility contract: the same
seed must yield the same draw sequence on every platform, so the algorithm
and its constants are fixed here rather than delegated to library RNGs
whose streams may change between versions.

Algorithm: xoshiro256** (Blackman & Vigna), 4x64-bit state, seeded by
expanding the user seed through splitmix64. Constants:

    splitmix64:   gamma 0x9E3779B97F4A7C15,
                  mix   0xBF58476D1CE4E5B9 / 0x94D049BB133111EB
    xoshiro256**: output rotl(s1 * 5, 7) * 9, shift 17, rotation 45

Uniform doubles take the top 53 bits of a 64-bit draw: (u >> 11) * 2^-53,
giving values in [0, 1). Normals use the Box-Muller transform on pairs of
uniforms (the second value of each pair is cached and returned by the next
call). Bounded integers use rejection sampling to avoid modulo bias.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_TWO_NEG53 = 2.0 ** -53


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class RngStream:
    """xoshiro256** stream with a fixed, documented draw discipline."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        sm = self.seed
        state = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            state.append(word)
        if not any(state):  # all-zero state is the one forbidden fixpoint
            state[0] = 0x9E3779B97F4A7C15
        self._s = state
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        """Next double in [0, 1)."""
        return (self.next_u64() >> 11) * _TWO_NEG53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Next Gaussian draw via Box-Muller; consumes two uniforms per pair."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return mu + sigma * z
        # u1 in (0, 1] so log(u1) is finite
        u1 = ((self.next_u64() >> 11) + 1) * _TWO_NEG53
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = radius * math.sin(theta)
        return mu + sigma * radius * math.cos(theta)

    def randint(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randint bound must be positive, got {n}")
        threshold = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < threshold:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
