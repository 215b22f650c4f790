"""Pairwise-independent hashing of stream indices.

``h(j) = ((a*j + b) mod p) mod 2**k`` with ``p = 2**31 - 1``, ``a`` in
``[1, p)`` and ``b`` in ``[0, p)``. For distinct ``j, j' < p`` the collision
probability over ``(a, b)`` is at most ``2**-k``. Coefficients are drawn
from each trial's ``"hash"`` sub-stream, so both parties hold the same
function without communicating.
"""

from __future__ import annotations

import numpy as np

from dpcomm.randomness import child_seeds, words

PRIME = (1 << 31) - 1
MAX_BITS = 30


class PairwiseHash:
    """One hash function per trial, evaluated on index arrays."""

    def __init__(self, seeds, bits: int):
        if not 0 <= bits <= MAX_BITS:
            raise ValueError(f"hash length must lie in [0, {MAX_BITS}]")
        w = words(child_seeds(seeds, "hash"), 0, 2)
        self.a = (np.uint64(1) + w[:, 0] % np.uint64(PRIME - 1)).astype(np.int64)
        self.b = (w[:, 1] % np.uint64(PRIME)).astype(np.int64)
        self.bits = bits
        self.mask = np.int64((1 << bits) - 1)

    def __call__(self, index: np.ndarray, rows=None) -> np.ndarray:
        """Hash ``index`` (shape ``(n,)`` or ``(n, w)``) with trial ``i``'s function on row ``i``."""
        a, b = (self.a, self.b) if rows is None else (self.a[rows], self.b[rows])
        index = np.asarray(index, dtype=np.int64)
        if index.ndim == 2:
            a, b = a[:, None], b[:, None]
        return ((a * index + b) % PRIME) & self.mask

    @staticmethod
    def collision_bound(bits: int) -> float:
        return 2.0**-bits
