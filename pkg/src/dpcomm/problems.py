"""Pointer chasing, k-fold product relations and independent repetition.

A function ``F: [n] -> [n]`` is encoded as the integer
``sum_i (F(i) - 1) * n**(i - 1)`` (mixed radix, least significant digit
first), so Alice's and Bob's input alphabets are ``range(n**n)``. Pointers
are 1-based; the bit version reports the least significant bit of the
0-based encoding ``F^t(1) - 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dpcomm.info import Alphabet, JointDistribution
from dpcomm.protocols import (
    DEFAULT_CELL_CAP,
    DeterministicProtocol,
    LookupTable,
    PublicCoinProtocol,
    Relation,
    SizeError,
    _as_public,
)


@dataclass(frozen=True)
class PointerChasingInstance:
    n: int
    t: int
    fa: tuple[int, ...]
    fb: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "fa", tuple(int(v) for v in self.fa))
        object.__setattr__(self, "fb", tuple(int(v) for v in self.fb))
        if self.n < 1 or self.t < 1:
            raise ValueError("need n >= 1 and t >= 1")
        for f in (self.fa, self.fb):
            if len(f) != self.n or any(not 1 <= v <= self.n for v in f):
                raise ValueError("functions must map [n] to [n] (1-based)")

    @classmethod
    def random(cls, n: int, t: int, rng: np.random.Generator) -> "PointerChasingInstance":
        return cls(n, t, tuple(rng.integers(1, n + 1, n)), tuple(rng.integers(1, n + 1, n)))

    @property
    def x_code(self) -> int:
        return encode_function(self.fa)

    @property
    def y_code(self) -> int:
        return encode_function(self.fb)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "t": self.t, "fa": list(self.fa), "fb": list(self.fb)}

    @classmethod
    def from_json_dict(cls, obj) -> "PointerChasingInstance":
        return cls(int(obj["n"]), int(obj["t"]), tuple(obj["fa"]), tuple(obj["fb"]))


def encode_function(f: Sequence[int]) -> int:
    n = len(f)
    return sum((v - 1) * n**i for i, v in enumerate(f))


def decode_function(code: int, n: int) -> tuple[int, ...]:
    return tuple((code // n**i) % n + 1 for i in range(n))


def apply_coded(code, pointer_idx, n: int):
    """0-based image of 0-based pointers under the coded functions (vectorized)."""
    code = np.asarray(code, dtype=np.int64)
    pointer_idx = np.asarray(pointer_idx, dtype=np.int64)
    return (code // np.power(np.int64(n), pointer_idx)) % n


def fp_eval(inst: PointerChasingInstance) -> int:
    """``F^t(1)``: apply ``F_A``, ``F_B``, ``F_A``, ... starting from pointer 1."""
    p = 1
    for s in range(1, inst.t + 1):
        p = (inst.fa if s % 2 == 1 else inst.fb)[p - 1]
    return p


def bp_eval(inst: PointerChasingInstance) -> int:
    return (fp_eval(inst) - 1) & 1


def fp_eval_coded(x_code, y_code, n: int, t: int) -> np.ndarray:
    """0-based ``F^t(1) - 1`` for arrays of coded inputs."""
    p = np.zeros(np.broadcast(np.asarray(x_code), np.asarray(y_code)).shape, dtype=np.int64)
    for s in range(1, t + 1):
        p = apply_coded(x_code if s % 2 == 1 else y_code, p, n)
    return p


def function_alphabet(name: str, n: int) -> Alphabet:
    return Alphabet(name, range(n**n))


def pointer_alphabet(name: str, n: int) -> Alphabet:
    return Alphabet(name, tuple(range(1, n + 1)))


class PointerChasingRelation:
    """``FP_t`` (or ``BP_t`` with ``bit=True``) over coded function inputs.

    Acceptance is computed on demand; the dense table is only built for
    serialization.
    """

    def __init__(self, n: int, t: int, bit: bool = False):
        self.n, self.t, self.bit = n, t, bit
        self.x_alphabet = function_alphabet("X", n)
        self.y_alphabet = function_alphabet("Y", n)
        self.z_alphabet = Alphabet("Z", (0, 1)) if bit else pointer_alphabet("Z", n)

    def accepts_idx(self, xi, yi, zi) -> np.ndarray:
        p = fp_eval_coded(xi, yi, self.n, self.t)
        want = p & 1 if self.bit else p
        return want == np.asarray(zi)

    @property
    def accepts(self) -> np.ndarray:
        shape = (len(self.x_alphabet), len(self.y_alphabet), len(self.z_alphabet))
        if math.prod(shape) > DEFAULT_CELL_CAP:
            raise SizeError(f"relation table needs {math.prod(shape)} cells")
        x, y, z = np.indices(shape)
        return self.accepts_idx(x, y, z)


class _PointerStep:
    """Round message: the sender applies its function to the previous pointer."""

    def __init__(self, n: int):
        self.n = n

    def __call__(self, own, prefix):
        prev = prefix[-1] if prefix else np.zeros(np.shape(own), dtype=np.int64)
        return apply_coded(own, prev, self.n)


class _LastMessage:
    def __init__(self, bit: bool):
        self.bit = bit

    def __call__(self, own, prefix):
        last = np.asarray(prefix[-1])
        return last & 1 if self.bit else last


def naive_protocol(n: int, t: int, bit: bool = False) -> DeterministicProtocol:
    """Round ``s`` announces ``F^s(1)``; the final receiver outputs the last pointer (or its bit)."""
    if n < 2 or t < 1:
        raise ValueError("need n >= 2 and t >= 1")
    step = _PointerStep(n)
    return DeterministicProtocol(
        function_alphabet("X", n),
        function_alphabet("Y", n),
        Alphabet("Z", (0, 1)) if bit else pointer_alphabet("Z", n),
        tuple(pointer_alphabet(f"M{s}", n) for s in range(1, t + 1)),
        (step,) * t,
        _LastMessage(bit),
    )


def pointer_inputs(n: int) -> JointDistribution:
    """Uniform law over all pairs ``(F_A, F_B)``."""
    _check_cells(n ** (2 * n))
    size = n**n
    return JointDistribution(
        (function_alphabet("X", n), function_alphabet("Y", n)), np.full((size, size), 1.0 / (size * size))
    )


def _check_cells(cells: int, cap: int = DEFAULT_CELL_CAP):
    if cells > cap:
        raise SizeError(f"needs {cells} cells, above the cap of {cap}")


# -- k-fold products -----------------------------------------------------------------


def power_alphabet(a: Alphabet, k: int, name: str | None = None) -> Alphabet:
    """``a^k`` with tuple symbols in row-major order."""
    _check_cells(len(a) ** k)
    return Alphabet(a.name if name is None else name, tuple(itertools.product(a.symbols, repeat=k)))


class ProductRelation:
    """``f^k``: accepts iff the base relation accepts every coordinate."""

    def __init__(self, base, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.base, self.k = base, k
        self.x_alphabet = power_alphabet(base.x_alphabet, k)
        self.y_alphabet = power_alphabet(base.y_alphabet, k)
        self.z_alphabet = power_alphabet(base.z_alphabet, k)

    def coordinates(self, idx, alphabet: Alphabet) -> tuple[np.ndarray, ...]:
        return np.unravel_index(np.asarray(idx), (len(alphabet),) * self.k)

    def coordinate_accepts(self, xi, yi, zi) -> np.ndarray:
        """Per-coordinate acceptance, shape ``(k,) + broadcast shape``."""
        xs = self.coordinates(xi, self.base.x_alphabet)
        ys = self.coordinates(yi, self.base.y_alphabet)
        zs = self.coordinates(zi, self.base.z_alphabet)
        return np.stack([self.base.accepts_idx(a, b, c) for a, b, c in zip(xs, ys, zs)])

    def accepts_idx(self, xi, yi, zi) -> np.ndarray:
        return self.coordinate_accepts(xi, yi, zi).all(axis=0)

    @property
    def accepts(self) -> np.ndarray:
        shape = (len(self.x_alphabet), len(self.y_alphabet), len(self.z_alphabet))
        _check_cells(math.prod(shape))
        return self.accepts_idx(*np.indices(shape))


def product_relation(f, k: int) -> ProductRelation:
    return ProductRelation(f, k)


def product_inputs(mu: JointDistribution, k: int) -> JointDistribution:
    """``mu^k`` over ``(X^k, Y^k)`` with tuple symbols."""
    xa, ya = mu.axes
    _check_cells((len(xa) * len(ya)) ** k)
    base = np.asarray(mu.probs, dtype=np.float64)
    arr = np.ones(())
    for _ in range(k):
        arr = np.multiply.outer(arr, base)
    order = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    arr = arr.transpose(order).reshape(len(xa) ** k, len(ya) ** k)
    return JointDistribution((power_alphabet(xa, k), power_alphabet(ya, k)), arr)


class _Coordinatewise:
    """Apply one base message function per coordinate on mixed-radix encodings."""

    def __init__(self, fns, own_size: int, prefix_sizes: Sequence[int], out_size: int):
        self.fns = tuple(fns)
        self.own_size, self.prefix_sizes, self.out_size = own_size, tuple(prefix_sizes), out_size

    def __call__(self, own, prefix):
        k = len(self.fns)
        own_c = np.unravel_index(np.asarray(own), (self.own_size,) * k)
        pre_c = [np.unravel_index(np.asarray(m), (sz,) * k) for m, sz in zip(prefix, self.prefix_sizes)]
        outs = [np.asarray(fn(own_c[i], [pc[i] for pc in pre_c])) for i, fn in enumerate(self.fns)]
        return np.ravel_multi_index(outs, (self.out_size,) * k)


def _repeat_branch(branches: Sequence[DeterministicProtocol]) -> DeterministicProtocol:
    base = branches[0]
    k = len(branches)
    sizes = [len(a) for a in base.message_alphabets]
    fns = []
    for s in range(1, base.t + 1):
        own = len(base.own_alphabet(base.sender(s)))
        fns.append(_Coordinatewise([b.message_functions[s - 1] for b in branches], own, sizes[: s - 1], sizes[s - 1]))
    own = len(base.own_alphabet(base.output_party))
    out = _Coordinatewise([b.output_function for b in branches], own, sizes, len(base.z_alphabet))
    return DeterministicProtocol(
        power_alphabet(base.x_alphabet, k),
        power_alphabet(base.y_alphabet, k),
        power_alphabet(base.z_alphabet, k),
        tuple(power_alphabet(a, k) for a in base.message_alphabets),
        tuple(fns),
        out,
    )


def independent_repetition(p, k: int, shared_coins: bool = False) -> PublicCoinProtocol:
    """Run ``p`` on each of ``k`` coordinates in lockstep (round ``s`` carries all ``k`` messages).

    Coordinates use independent coins unless ``shared_coins`` is set.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pc = _as_public(p)
    ncoins = len(pc.coin_alphabet)
    if shared_coins:
        combos = [(c,) * k for c in range(ncoins)]
        probs = np.asarray(pc.coin_probs)
        coin_alpha = pc.coin_alphabet
    else:
        _check_cells(ncoins**k)
        combos = list(itertools.product(range(ncoins), repeat=k))
        probs = np.array([math.prod(pc.coin_probs[c] for c in combo) for combo in combos])
        coin_alpha = power_alphabet(pc.coin_alphabet, k)
    branches = tuple(_repeat_branch([pc.branches[c] for c in combo]) for combo in combos)
    return PublicCoinProtocol(coin_alpha, probs / probs.sum(), branches)


def equality_relation(bits: int = 1) -> Relation:
    """``f(x, y) = [x == y]`` on ``bits``-bit strings; ``z`` is the claimed answer."""
    a = tuple(range(2**bits))
    return Relation.from_predicate(Alphabet("X", a), Alphabet("Y", a), Alphabet("Z", (0, 1)),
                                   lambda x, y, z: z == int(x == y))


def noisy_equality_protocol(flip: float = 0.1, bits: int = 1) -> PublicCoinProtocol:
    """Alice sends ``x``; Bob answers ``[x == y]``, negated when the public coin says so.

    On any input distribution its success probability is exactly ``1 - flip``.
    """
    f = equality_relation(bits)
    n = len(f.x_alphabet)
    msg = Alphabet("M1", tuple(range(n)))
    eq = np.eye(n, dtype=np.int64)
    branches = tuple(
        DeterministicProtocol(f.x_alphabet, f.y_alphabet, f.z_alphabet, (msg,), (LookupTable(np.arange(n)),),
                              LookupTable(eq.T if not neg else 1 - eq.T))
        for neg in (False, True)
    )
    return PublicCoinProtocol(Alphabet("coin", ("keep", "flip")), np.array([1 - flip, flip]), branches)
