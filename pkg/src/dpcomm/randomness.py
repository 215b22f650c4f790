"""Replayable shared randomness.

Every random word is a pure function of a 64-bit seed and a counter: word
``k`` of seed ``s`` is the splitmix64 finalizer applied to
``s + (k + 1) * GAMMA`` (mod 2**64), i.e. the ``k``-th output of a splitmix64
generator started at ``s``. Streams can therefore be regenerated from any
offset, and whole batches of per-trial streams are computed with numpy in one
shot.

Seed expansion:

* trial ``i`` of master seed ``m`` uses seed ``word(m, i)``;
* a named sub-stream ``tag`` of seed ``s`` uses ``mix(s ^ H(tag))`` where
  ``H`` is the first 8 bytes of BLAKE2b of ``repr(tag)``.

Stream entry ``j`` is the pair ``(symbol, level)`` with
``symbol = word(s, 2j) mod |U|`` and ``level = word(s, 2j + 1)``, a 64-bit
fixed-point number in ``[0, 1)``. The modulo bias is below ``|U| / 2**64``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1
TWO64 = float(2**64)


def mix(z) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.array(z, dtype=np.uint64, ndmin=1)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def words(seeds, start: int, stop: int) -> np.ndarray:
    """Words ``start..stop-1`` for each seed; shape ``(len(seeds), stop - start)``."""
    seeds = np.array(seeds, dtype=np.uint64, ndmin=1)
    k = np.arange(start + 1, stop + 1, dtype=np.uint64)
    return mix(seeds[:, None] + k[None, :] * GAMMA)


def tag_value(tag) -> int:
    return int.from_bytes(hashlib.blake2b(repr(tag).encode(), digest_size=8).digest(), "little")


def child_seeds(seeds, tag) -> np.ndarray:
    seeds = np.array(seeds, dtype=np.uint64, ndmin=1)
    return mix(seeds ^ np.uint64(tag_value(tag)))


def trial_seeds(master: int, count: int, offset: int = 0) -> np.ndarray:
    """Per-trial seeds ``word(master, offset + i)``."""
    return words([master & MASK64], offset, offset + count)[0]


def entries(seeds, start: int, stop: int, universe: int) -> tuple[np.ndarray, np.ndarray]:
    """Symbols (int64) and levels (uint64) of entries ``start..stop-1`` per seed."""
    w = words(seeds, 2 * start, 2 * stop)
    symbols = (w[:, 0::2] % np.uint64(universe)).astype(np.int64)
    return symbols, w[:, 1::2]


def thresholds(p) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-point acceptance thresholds for ``level < p``.

    Returns ``(thr, always)``: ``level < p`` iff ``always or level < thr``.
    Float ``p`` is a dyadic rational, so ``p * 2**64`` is exact and the test
    accepts with probability exactly ``p``.
    """
    p = np.asarray(p, dtype=np.float64)
    always = p >= 1.0
    scaled = np.ldexp(np.clip(p, 0.0, 1.0), 64)
    thr = np.where(always, 0.0, scaled).astype(np.uint64)
    return thr, always


def accept(levels: np.ndarray, symbols: np.ndarray, thr_rows: np.ndarray, always_rows: np.ndarray):
    """Acceptance mask for a ``(trials, width)`` block given per-trial threshold rows."""
    t = np.take_along_axis(thr_rows, symbols, axis=1)
    a = np.take_along_axis(always_rows, symbols, axis=1)
    return a | (levels < t)


def default_length(universe: int) -> int:
    """Truncation length; first-acceptance exhaustion is below ``(1 - 1/|U|)**L``."""
    return int(np.ceil(50 * max(universe, 1)))


def exhaustion_bound(universe: int, length: int) -> float:
    """Probability that a sampler never accepts within ``length`` entries."""
    if universe <= 1:
        return 0.0
    return float(np.exp(length * np.log1p(-1.0 / universe)))


@dataclass(frozen=True)
class RandomnessStream:
    """Seeded stream of ``(symbol, level)`` entries over a universe of size ``universe``.

    Two holders of the same seed see the same entries. ``length`` truncates
    every scan over the stream.
    """

    seed: int
    universe: int
    length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & MASK64)
        if self.universe < 1:
            raise ValueError("universe must be non-empty")
        if self.length is None:
            object.__setattr__(self, "length", default_length(self.universe))

    def entries(self, start: int = 0, stop: int | None = None):
        stop = self.length if stop is None else stop
        s, lv = entries([self.seed], start, stop, self.universe)
        return s[0], lv[0]

    def levels_as_float(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return self.entries(start, stop)[1].astype(np.float64) / TWO64

    def child(self, tag, universe: int | None = None, length: int | None = None) -> "RandomnessStream":
        u = self.universe if universe is None else universe
        return RandomnessStream(int(child_seeds([self.seed], tag)[0]), u, length)

    def words(self, count: int, start: int = 0) -> np.ndarray:
        return words([self.seed], start, start + count)[0]
