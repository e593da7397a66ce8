"""Dense float64 helpers and a seedable xoshiro256** generator.

Matrices are plain ``numpy`` float64 arrays (row-major). The generator is
implemented here rather than borrowed from numpy so that its stream is fixed by
a published recurrence and never changes between library versions.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def matvec(m, v):
    """Return ``m @ v`` after checking that the shapes agree."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(f"matvec shape mismatch: matrix {m.shape} vs vector {v.shape}")
    return m @ v


def splitmix64(state):
    """One splitmix64 step. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class Rng:
    """xoshiro256** seeded through splitmix64.

    ``uniform`` consumes one 64-bit output per call and ``gaussian`` consumes
    exactly two (Box-Muller, cosine branch only, no cached spare).
    """

    algorithm = "xoshiro256**"

    def __init__(self, seed):
        seed = int(seed) & _MASK64
        self.seed = seed
        sm = seed
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        if not any(s):  # pragma: no cover - splitmix64 cannot emit four zeros in a row
            s[0] = 1
        self._s = s

    @property
    def state(self):
        return tuple(self._s)

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        x = (s1 * 5) & _MASK64
        result = ((((x << 7) | (x >> 57)) & _MASK64) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got lo={lo}, hi={hi}")
        x = lo + (hi - lo) * self.random()
        # rounding can land exactly on hi for wide ranges
        return x if x < hi else math.nextafter(hi, lo)

    def gaussian(self, mean=0.0, stddev=1.0):
        if stddev < 0:
            raise ValueError(f"stddev must be >= 0, got {stddev}")
        u1 = self.random()
        u2 = self.random()
        if stddev == 0:
            return float(mean)
        z = math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(_TWO_PI * u2)
        return mean + stddev * z

    def below(self, n):
        """Unbiased integer in [0, n) by rejection on the top bits."""
        if n <= 0:
            raise ValueError("below() needs n > 0")
        shift = 64 - max(1, (n - 1).bit_length())
        nxt = self.next_u64
        while True:
            r = nxt() >> shift
            if r < n:
                return r

    def uniform_array(self, shape, lo, hi):
        count = int(np.prod(shape)) if shape else 1
        return np.array([self.uniform(lo, hi) for _ in range(count)], dtype=np.float64).reshape(shape)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``, walking from the top down.

        Each swap index comes from ``below(i + 1)``.
        """
        idx = list(range(n))
        below = self.below
        for i in range(n - 1, 0, -1):
            j = below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(idx, dtype=np.int64)

    def substream(self, tag):
        """Independent generator derived from this one's seed and a string tag."""
        h = self.seed
        for byte in tag.encode("utf-8"):
            h, _ = splitmix64(h ^ byte)
        _, out = splitmix64(h)
        return Rng(out)


rng_uniform = Rng.uniform
rng_gaussian = Rng.gaussian
