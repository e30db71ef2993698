"""Deterministic, platform-independent pseudo-random generator.

Every seeded operation in the package draws from this generator so that
results reproduce byte-for-byte across machines and implementations. The
construction, exactly:

seeding (splitmix64)
    state <- (seed + stream * 0x9E3779B97F4A7C15) mod 2^64
    each splitmix64 output:
        state <- (state + 0x9E3779B97F4A7C15) mod 2^64
        z <- state
        z <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
        z <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
        output z XOR (z >> 31)
    The xoshiro state s0..s3 is the first four splitmix64 outputs.

stream (xoshiro256**)
    result <- rotl64(s1 * 5, 7) * 9          (all mod 2^64)
    t  <- s1 << 17
    s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t
    s3 <- rotl64(s3, 45)

derived quantities
    uniform in [0, 1):  (u64 >> 11) * 2^-53
    uniform in (0, 1]:  ((u64 >> 11) + 1) * 2^-53
    integer in [0, n):  rejection sampling; draw u64 until
                        u < 2^64 - (2^64 mod n), return u mod n.
                        n == 1 returns 0 and consumes nothing.
    gaussians:          Box-Muller pairs; u1 in (0,1], u2 in [0,1);
                        r = sqrt(-2 ln u1), outputs r*cos(2*pi*u2)
                        then r*sin(2*pi*u2).
    shuffle:            ascending Fisher-Yates; step i swaps positions
                        i and i + randint(n - i).
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream ids used by the training loop so that, e.g., changing the epoch
# count never shifts the parameter-initialization draws.
STREAM_DEFAULT = 0
STREAM_INIT = 1
STREAM_SHUFFLE = 2
STREAM_SUBSAMPLE = 3


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** stream seeded through splitmix64."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int, stream: int = STREAM_DEFAULT):
        state = (int(seed) + _GOLDEN * int(stream)) & _MASK64
        state, self._s0 = _splitmix64(state)
        state, self._s1 = _splitmix64(state)
        state, self._s2 = _splitmix64(state)
        state, self._s3 = _splitmix64(state)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_open(self) -> float:
        """Uniform double in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def uniforms(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        if n == 1:
            return 0
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def normals(self, n: int) -> list[float]:
        """n standard-normal draws via Box-Muller pairs."""
        out: list[float] = []
        for _ in range((n + 1) // 2):
            u1 = self.uniform_open()
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out.append(r * math.cos(theta))
            out.append(r * math.sin(theta))
        return out[:n]

    def choose(self, n: int, k: int) -> list[int]:
        """First k entries of a Fisher-Yates shuffle of range(n)."""
        if not 0 <= k <= n:
            raise ValueError("choose() needs 0 <= k <= n")
        arr = list(range(n))
        for i in range(k):
            remaining = n - i
            j = i if remaining == 1 else i + self.below(remaining)
            arr[i], arr[j] = arr[j], arr[i]
        return arr[:k]

    def permutation(self, n: int) -> list[int]:
        return self.choose(n, n)
