"""Portable seeded random number generation.

Every random draw in this package comes from one fixed, fully documented
generator so that fixtures and benchmark outputs are reproducible bit for
bit across platforms and releases:

* Bit stream: SplitMix64.  Output ``i`` (0-based) for seed ``s`` is
  ``mix64((s + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)`` where ``mix64``
  is the standard SplitMix64 finalizer (xor-shift 30 / multiply
  0xBF58476D1CE4E5B9 / xor-shift 27 / multiply 0x94D049BB133111EB /
  xor-shift 31).
* Uniforms: the top 53 bits of an output word, scaled by 2**-53.
* Gaussians: the Box-Muller transform on uniform pairs (no ziggurat, no
  rejection), so the mapping from bit stream to variates is identical in
  any conforming implementation.
* Derived seeds: ``derive_seed(master, *parts)`` folds each integer part
  into the state with one mix64 round.  Trial ``i`` of a benchmark uses
  ``derive_seed(master_seed, i)``, and the operator / signal / noise
  streams inside a trial use stream tags ``derive_seed(trial_seed, tag)``
  with tags 1, 2, 3 respectively (see ``bench``).
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def mix64(value: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (scalar path)."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *parts: int) -> int:
    """Derive a child seed from a master seed and integer labels.

    The rule is ``h <- mix64((h + GAMMA) XOR part)`` applied left to
    right, starting from ``h = master_seed mod 2**64``.  Used for
    per-trial seeds and per-stream seeds inside a trial.
    """
    h = master_seed & _MASK64
    for part in parts:
        h = mix64(((h + _GAMMA) & _MASK64) ^ (part & _MASK64))
    return h


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Seedable counter-based SplitMix64 stream.

    ``raw``/``uniform``/``normal`` consume a documented number of stream
    positions, so generation is reproducible regardless of block sizes.
    ``normal(n)`` always consumes ``2 * ceil(n / 2)`` positions.
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._position = 0

    @property
    def position(self) -> int:
        return self._position

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` output words as uint64."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        start = self._position
        self._position += n
        index = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        state = np.uint64(self._seed) + index * np.uint64(_GAMMA)
        return _mix64_array(state)

    def raw_scalar(self) -> int:
        """Next single output word (pure-integer path)."""
        self._position += 1
        return mix64((self._seed + self._position * _GAMMA) & _MASK64)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal doubles via Box-Muller."""
        pairs = (n + 1) // 2
        words = self.raw(2 * pairs)
        # u1 in (0, 1] so log never sees zero; u2 in [0, 1).
        u1 = ((words[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (words[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def signs(self, n: int) -> np.ndarray:
        """``n`` equiprobable +-1.0 values (top bit of each word)."""
        bit = (self.raw(n) >> np.uint64(63)).astype(np.float64)
        return 2.0 * bit - 1.0

    def index_below(self, bound: int) -> int:
        """One integer in [0, bound) via modulo reduction.

        The modulo bias is below 2**-50 for the bounds used here
        (bound <= 2**13) and is accepted for the sake of a simple,
        fully specified reduction.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.raw_scalar() % bound

    def choose_without_replacement(self, population: int, k: int) -> np.ndarray:
        """``k`` distinct indices from [0, population), sorted ascending.

        Partial Fisher-Yates: uniform over size-k subsets.
        """
        if not 0 <= k <= population:
            raise ValueError("need 0 <= k <= population")
        pool = np.arange(population, dtype=np.int64)
        for i in range(k):
            j = i + self.index_below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        picked = pool[:k]
        picked.sort()
        return picked

    def permutation(self, n: int) -> np.ndarray:
        """Full Fisher-Yates permutation of [0, n)."""
        order = np.arange(n, dtype=np.int64)
        for i in range(n - 1):
            j = i + self.index_below(n - i)
            order[i], order[j] = order[j], order[i]
        return order
