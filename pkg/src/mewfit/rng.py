"""Deterministic pseudo-random streams used by the experiment generators.

The generator is pinned so that any implementation, in any language, can
replicate the byte-exact draws from a ``(seed, stream)`` pair:

* Stream seeding: run SplitMix64 from ``seed`` (64-bit wrap-around state),
  discard ``stream`` outputs, and take the next output as the xorshift64*
  state. A zero state is replaced by the SplitMix64 increment constant
  0x9E3779B97F4A7C15.
* Core generator: xorshift64* — ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``
  (64-bit), output ``x * 0x2545F4914F6CDD1D`` mod 2**64.
* ``uniform``: top 53 bits of the output word scaled by 2**-53, in [0, 1).
* ``normal``: Box-Muller on a uniform pair (u1, u2) drawn in that order,
  with ``r = sqrt(-2 ln(1 - u1))``; returns ``r cos(2 pi u2)`` first and
  caches ``r sin(2 pi u2)`` for the next call.
* ``randbelow(n)``: ``floor(uniform() * n)``.
* ``shuffle``: Fisher-Yates from the last index down, ``j = randbelow(i + 1)``.
"""

import math

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(state):
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


class Rng:
    """xorshift64* stream derived from ``(seed, stream)`` via SplitMix64."""

    def __init__(self, seed, stream=0):
        state = seed & _MASK64
        out = 0
        for _ in range(stream + 1):
            out, state = _splitmix64(state)
        self._x = out if out != 0 else _SPLITMIX_GAMMA
        self._cached_normal = None

    def next_u64(self):
        x = self._x
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._x = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self):
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self):
        if self._cached_normal is not None:
            z = self._cached_normal
            self._cached_normal = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        theta = 2.0 * math.pi * u2
        self._cached_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def randbelow(self, n):
        return int(self.uniform() * n)

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n, k):
        """k distinct indices from range(n): shuffle then take the prefix."""
        idx = list(range(n))
        self.shuffle(idx)
        return sorted(idx[:k])
