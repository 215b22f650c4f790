"""Finite joint distributions and the information measures built on them.

Distributions are dense probability tables over a product of named finite
alphabets. All logarithms are base 2, so every measure is in bits, and
``0 * log 0`` is taken to be 0.

Tables hold either ``float64`` entries or, in exact mode, ``fractions.Fraction``
entries (see :func:`as_exact`). In exact mode entropies and divergences come
back as :class:`dpcomm.exact.LogSum` values, which compare equal exactly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from dpcomm.exact import LogSum

# Tolerances live here and nowhere else.
IDENTITY_TOL = 1e-9
NORMALIZATION_TOL = 1e-12
JSON_SUM_TOL = 1e-9


class DistributionError(ValueError):
    """Malformed distribution, unknown axis, or mismatched alphabets."""


class ConditioningError(DistributionError):
    """Conditioning on an event of probability zero."""


def _names(group) -> tuple[str, ...]:
    if group is None:
        return ()
    if isinstance(group, str):
        return (group,)
    return tuple(group)


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


@dataclass(frozen=True)
class Alphabet:
    """A named, ordered set of distinct hashable symbols.

    ``symbols`` may be a ``range`` for large implicit alphabets (e.g. all
    functions ``[n] -> [n]`` encoded as integers).
    """

    name: str
    symbols: Sequence

    def __post_init__(self):
        syms = self.symbols if isinstance(self.symbols, range) else tuple(self.symbols)
        object.__setattr__(self, "symbols", syms)
        if len(syms) < 1:
            raise DistributionError(f"alphabet {self.name!r} is empty")
        if not isinstance(syms, range) and len(set(syms)) != len(syms):
            raise DistributionError(f"alphabet {self.name!r} has repeated symbols")

    @classmethod
    def of_size(cls, name: str, n: int) -> "Alphabet":
        return cls(name, range(n)) if n > 256 else cls(name, tuple(range(n)))

    def __len__(self) -> int:
        return len(self.symbols)

    @cached_property
    def _lookup(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, symbol) -> int:
        if isinstance(self.symbols, range):
            try:
                return self.symbols.index(symbol)
            except ValueError:
                raise DistributionError(f"{symbol!r} not in alphabet {self.name!r}") from None
        try:
            return self._lookup[symbol]
        except KeyError:
            raise DistributionError(f"{symbol!r} not in alphabet {self.name!r}") from None

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.symbols)


class JointDistribution:
    """Immutable probability table over ``axes`` (row-major in axis order)."""

    def __init__(self, axes: Iterable[Alphabet], probs, *, tol: float = NORMALIZATION_TOL):
        axes = tuple(axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise DistributionError(f"duplicate axis names {names}")
        shape = tuple(len(a) for a in axes)
        arr = np.asarray(probs)
        if arr.dtype != object:
            arr = arr.astype(np.float64, copy=True)
        else:
            arr = arr.copy()
        if arr.shape != shape:
            if arr.size != math.prod(shape):
                raise DistributionError(f"table of size {arr.size} does not fit shape {shape}")
            arr = arr.reshape(shape)
        if _is_exact(arr):
            if any(v < 0 for v in arr.flat):
                raise DistributionError("negative probability")
            if sum(arr.flat, Fraction(0)) != 1:
                raise DistributionError("exact table does not sum to 1")
        else:
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DistributionError("probabilities must be finite and non-negative")
            total = float(arr.sum())
            if abs(total - 1.0) > tol:
                raise DistributionError(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        self._axes = axes
        self._probs = arr

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_array(cls, probs, names: Sequence[str], symbols: Sequence[Sequence] | None = None):
        """Table with integer symbols ``0..n-1`` unless ``symbols`` are given."""
        arr = np.asarray(probs)
        names = _names(names)
        if arr.ndim != len(names):
            raise DistributionError(f"{arr.ndim}-d table but {len(names)} axis names")
        if symbols is None:
            axes = [Alphabet(n, tuple(range(s))) for n, s in zip(names, arr.shape)]
        else:
            axes = [Alphabet(n, syms) for n, syms in zip(names, symbols)]
        return cls(axes, arr)

    @classmethod
    def uniform(cls, axes: Iterable[Alphabet]):
        axes = tuple(axes)
        shape = tuple(len(a) for a in axes)
        return cls(axes, np.full(shape, 1.0 / math.prod(shape)))

    @classmethod
    def point_mass(cls, axes: Iterable[Alphabet], symbols: Sequence):
        axes = tuple(axes)
        arr = np.zeros(tuple(len(a) for a in axes))
        arr[tuple(a.index(s) for a, s in zip(axes, symbols))] = 1.0
        return cls(axes, arr)

    # -- accessors ---------------------------------------------------------------

    @property
    def axes(self) -> tuple[Alphabet, ...]:
        return self._axes

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self._axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self._probs.shape

    @property
    def ndim(self) -> int:
        return len(self._axes)

    @property
    def exact(self) -> bool:
        return _is_exact(self._probs)

    def axis_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DistributionError(f"unknown axis {name!r}; axes are {self.names}") from None

    def alphabet(self, name: str) -> Alphabet:
        return self._axes[self.axis_index(name)]

    def prob(self, assignment: Mapping) -> float:
        """Probability of a full assignment ``{axis: symbol}``."""
        if set(assignment) != set(self.names):
            raise DistributionError("assignment must cover every axis")
        idx = tuple(a.index(assignment[a.name]) for a in self._axes)
        return self._probs[idx]

    def support(self) -> np.ndarray:
        return np.asarray(self._probs > 0, dtype=bool)

    def __repr__(self):
        dims = ", ".join(f"{a.name}:{len(a)}" for a in self._axes)
        kind = "exact" if self.exact else "float"
        return f"JointDistribution({dims}; {kind})"

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return self._axes == other._axes and np.array_equal(self._probs, other._probs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """Law of ``out_axes`` given ``given_axes``.

    ``rows`` has shape ``given_shape + out_shape``. Rows flagged as undefined
    in ``defined`` are zero-filled; they may only be hit with probability 0.
    """

    given_axes: tuple[Alphabet, ...]
    out_axes: tuple[Alphabet, ...]
    rows: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "given_axes", tuple(self.given_axes))
        object.__setattr__(self, "out_axes", tuple(self.out_axes))
        gshape = tuple(len(a) for a in self.given_axes)
        oshape = tuple(len(a) for a in self.out_axes)
        rows = np.asarray(self.rows)
        if rows.dtype != object:
            rows = rows.astype(np.float64)
        rows = rows.reshape(gshape + oshape).copy()
        defined = np.broadcast_to(np.asarray(self.defined, dtype=bool), gshape).copy()
        sums = rows.reshape(gshape + (-1,)).sum(axis=-1)
        if _is_exact(rows):
            ok = all(s == 1 for s in np.asarray(sums)[defined].flat)
        else:
            if np.any(rows < 0):
                raise DistributionError("negative kernel entry")
            ok = bool(np.all(np.abs(np.asarray(sums)[defined] - 1.0) <= NORMALIZATION_TOL))
        if not ok:
            raise DistributionError("kernel rows must sum to 1")
        rows[~defined] = 0
        rows.setflags(write=False)
        defined.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "defined", defined)

    @classmethod
    def from_rows(cls, given: Sequence[Alphabet], out: Sequence[Alphabet], rows):
        gshape = tuple(len(a) for a in given)
        return cls(tuple(given), tuple(out), rows, np.ones(gshape, dtype=bool))

    @classmethod
    def copy_of(cls, source: Alphabet, out_name: str):
        """Kernel that copies ``source`` into a new axis ``out_name``."""
        n = len(source)
        return cls.from_rows([source], [source.renamed(out_name)], np.eye(n))

    def row(self, given_symbols: Sequence) -> np.ndarray:
        idx = tuple(a.index(s) for a, s in zip(self.given_axes, given_symbols))
        if not self.defined[idx]:
            raise ConditioningError(f"kernel row {tuple(given_symbols)} is undefined")
        return self.rows[idx]


# -- structural operations -----------------------------------------------------


def marginal(d: JointDistribution, keep) -> JointDistribution:
    """Sum out every axis not in ``keep``; surviving axes keep their order in ``d``."""
    keep = _names(keep)
    if not keep:
        raise DistributionError("marginal needs at least one axis")
    idx = {d.axis_index(n) for n in keep}
    drop = tuple(i for i in range(d.ndim) if i not in idx)
    probs = d.probs.sum(axis=drop) if drop else d.probs
    return JointDistribution([d.axes[i] for i in sorted(idx)], probs)


def reorder(d: JointDistribution, names) -> JointDistribution:
    names = _names(names)
    if sorted(names) != sorted(d.names):
        raise DistributionError(f"reorder needs a permutation of {d.names}, got {names}")
    perm = [d.axis_index(n) for n in names]
    return JointDistribution([d.axes[i] for i in perm], np.transpose(d.probs, perm))


def rename(d: JointDistribution, mapping: Mapping[str, str]) -> JointDistribution:
    for n in mapping:
        d.axis_index(n)
    axes = [a.renamed(mapping.get(a.name, a.name)) for a in d.axes]
    return JointDistribution(axes, d.probs)


def merge_axes(d: JointDistribution, names, new_name: str) -> JointDistribution:
    """Fuse ``names`` into one axis whose symbols are tuples, placed first."""
    names = _names(names)
    rest = [n for n in d.names if n not in names]
    r = reorder(d, list(names) + rest)
    group = r.axes[: len(names)]
    symbols = tuple(itertools.product(*(a.symbols for a in group)))
    n = math.prod(len(a) for a in group)
    probs = r.probs.reshape((n,) + r.shape[len(names):])
    return JointDistribution([Alphabet(new_name, symbols)] + list(r.axes[len(names):]), probs)


def condition(d: JointDistribution, axis, value=None) -> JointDistribution:
    """Renormalized slice of ``d`` at ``axis = value``.

    ``axis`` may also be a mapping ``{axis: value, ...}`` to condition on
    several axes at once. The conditioned axes are removed.
    """
    assignment = dict(axis) if isinstance(axis, Mapping) else {axis: value}
    index: list = [slice(None)] * d.ndim
    for name, sym in assignment.items():
        i = d.axis_index(name)
        index[i] = d.axes[i].index(sym)
    rest = [a for a in d.axes if a.name not in assignment]
    if not rest:
        raise DistributionError("conditioning on every axis leaves nothing")
    sl = d.probs[tuple(index)]
    mass = sl.sum()
    if mass <= 0:
        raise ConditioningError(f"Pr[{assignment}] = 0")
    return JointDistribution(rest, sl / mass)


def tensor(d1: JointDistribution, d2: JointDistribution) -> JointDistribution:
    """Independent product ``d1 (x) d2``."""
    clash = set(d1.names) & set(d2.names)
    if clash:
        raise DistributionError(f"axis names collide: {sorted(clash)}")
    return JointDistribution(d1.axes + d2.axes, np.multiply.outer(d1.probs, d2.probs))


def tensor_power(d: JointDistribution, k: int, fmt: str = "{name}{i}") -> JointDistribution:
    """``d`` tensored ``k`` times; axis ``name`` of copy ``i`` (1-based) is ``fmt``."""
    if k < 1:
        raise DistributionError("k must be >= 1")
    out = None
    for i in range(1, k + 1):
        copy = rename(d, {n: fmt.format(name=n, i=i) for n in d.names})
        out = copy if out is None else tensor(out, copy)
    return out


def mixture(weights: Sequence, dists: Sequence[JointDistribution]) -> JointDistribution:
    """Convex combination of distributions over identical axes."""
    first = dists[0]
    probs = None
    for w, dd in zip(weights, dists):
        dd = _aligned(first, dd)
        probs = w * dd.probs if probs is None else probs + w * dd.probs
    return JointDistribution(first.axes, probs)


def conditional_kernel(d: JointDistribution, given, out) -> ConditionalKernel:
    """The law of ``out`` given ``given`` read off ``d`` (zero rows undefined)."""
    given, out = _names(given), _names(out)
    if set(given) & set(out):
        raise DistributionError("given and out axes overlap")
    joint = reorder(marginal(d, given + out), given + out)
    g = len(given)
    gm = joint.probs.sum(axis=tuple(range(g, joint.ndim)))
    gm = np.asarray(gm)
    defined = np.asarray(gm > 0, dtype=bool)
    safe = np.where(defined, gm, 1)
    rows = joint.probs / safe.reshape(gm.shape + (1,) * len(out))
    rows = np.where(defined.reshape(defined.shape + (1,) * len(out)), rows, 0)
    return ConditionalKernel(joint.axes[:g], joint.axes[g:], rows, defined)


def markov_extend(d: JointDistribution, kernel: ConditionalKernel) -> JointDistribution:
    """Append ``kernel``'s output axes to ``d``, drawn from the given axes only.

    Realizes ``Pr[(AB)(C|B) = a, b, c] = Pr[A=a, B=b] * Pr[C=c | B=b]``.
    """
    positions = []
    for a in kernel.given_axes:
        i = d.axis_index(a.name)
        if d.axes[i] != a:
            raise DistributionError(f"kernel alphabet for {a.name!r} differs from the table's")
        positions.append(i)
    clash = {a.name for a in kernel.out_axes} & set(d.names)
    if clash:
        raise DistributionError(f"kernel output axes already present: {sorted(clash)}")
    g = len(positions)
    o = len(kernel.out_axes)
    order = list(np.argsort(positions))
    rows = kernel.rows.transpose(order + list(range(g, g + o)))
    defined = kernel.defined.transpose(order)
    shape = [1] * d.ndim
    for p in positions:
        shape[p] = d.shape[p]
    oshape = tuple(len(a) for a in kernel.out_axes)
    rows = rows.reshape(tuple(shape) + oshape)
    defined = defined.reshape(shape)
    if np.any(np.asarray(d.probs > 0, dtype=bool) & ~defined):
        raise ConditioningError("kernel row undefined on a positive-probability event")
    probs = d.probs.reshape(d.shape + (1,) * o) * rows
    return JointDistribution(d.axes + kernel.out_axes, probs)


def markov_projection(d: JointDistribution, a, b, c) -> JointDistribution:
    """The Markov chain ``(AB)(C|B)`` built from ``d``, in ``d``'s axis order."""
    a, b, c = _names(a), _names(b), _names(c)
    out = markov_extend(marginal(d, a + b), conditional_kernel(d, b, c))
    order = [n for n in d.names if n in set(a + b + c)]
    return reorder(out, order)


def _aligned(ref: JointDistribution, other: JointDistribution) -> JointDistribution:
    if ref.names != other.names:
        if sorted(ref.names) != sorted(other.names):
            raise DistributionError(f"axes differ: {ref.names} vs {other.names}")
        other = reorder(other, ref.names)
    if ref.axes != other.axes:
        raise DistributionError("alphabets differ")
    return other


# -- measures --------------------------------------------------------------------


def _sum_plog(p: np.ndarray, r: np.ndarray):
    """``sum p * log2(r)`` over entries with ``p > 0``."""
    if _is_exact(p) or _is_exact(r):
        total = LogSum()
        for pi, ri in zip(np.asarray(p).flat, np.asarray(r).flat):
            if pi > 0:
                total = total + LogSum.log2(ri) * Fraction(pi)
        return total
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(r[mask])))


def _clip(v):
    return max(v, 0.0) if isinstance(v, float) else v


def l1_distance(d1: JointDistribution, d2: JointDistribution):
    """Half the absolute difference sum (total variation distance)."""
    d2 = _aligned(d1, d2)
    diff = np.abs(d1.probs - d2.probs)
    if _is_exact(diff):
        return sum(diff.flat, Fraction(0)) / 2
    return 0.5 * float(diff.sum())


def entropy(d: JointDistribution):
    p = d.probs
    return _clip(-_sum_plog(p, p))


def conditional_entropy(d: JointDistribution, a, c=()):
    a, c = _names(a), _names(c)
    if not c:
        return entropy(marginal(d, a))
    return entropy(marginal(d, a + c)) - entropy(marginal(d, c))


def relative_entropy(d1: JointDistribution, d2: JointDistribution):
    """``D(d1 || d2)`` in bits; ``math.inf`` when ``d1`` leaves ``d2``'s support."""
    d2 = _aligned(d1, d2)
    p, q = d1.probs, d2.probs
    mask = np.asarray(p > 0, dtype=bool)
    if np.any(np.asarray(q[mask] == 0, dtype=bool)):
        return math.inf
    return _clip(_sum_plog(p[mask], p[mask] / q[mask]))


def relative_min_entropy(d1: JointDistribution, d2: JointDistribution):
    """``max_x log2(d1(x) / d2(x))`` over the support of ``d1``."""
    d2 = _aligned(d1, d2)
    p, q = d1.probs, d2.probs
    mask = np.asarray(p > 0, dtype=bool)
    if np.any(np.asarray(q[mask] == 0, dtype=bool)):
        return math.inf
    ratios = p[mask] / q[mask]
    if _is_exact(ratios):
        return LogSum.log2(max(ratios.flat))
    return float(np.log2(ratios.max()))


def _check_groups(d, *groups):
    seen: set[str] = set()
    for g in groups:
        for n in g:
            d.axis_index(n)
            if n in seen:
                raise DistributionError(f"axis {n!r} appears in more than one group")
            seen.add(n)


def mutual_information(d: JointDistribution, a, b):
    """``I(A:B) = H(A) + H(B) - H(AB)``."""
    a, b = _names(a), _names(b)
    if not a or not b:
        raise DistributionError("mutual information needs two non-empty groups")
    _check_groups(d, a, b)
    v = entropy(marginal(d, a)) + entropy(marginal(d, b)) - entropy(marginal(d, a + b))
    return _clip(v)


def conditional_mutual_information(d: JointDistribution, a, b, c=()):
    """``I(A:B|C) = H(AC) + H(BC) - H(ABC) - H(C)``."""
    a, b, c = _names(a), _names(b), _names(c)
    if not c:
        return mutual_information(d, a, b)
    if not a or not b:
        raise DistributionError("conditional mutual information needs non-empty A and B")
    _check_groups(d, a, b, c)
    v = (
        entropy(marginal(d, a + c))
        + entropy(marginal(d, b + c))
        - entropy(marginal(d, a + b + c))
        - entropy(marginal(d, c))
    )
    return _clip(v)


# -- exact mode -----------------------------------------------------------------


def as_exact(d: JointDistribution, max_denominator: int | None = None) -> JointDistribution:
    """Rational copy of ``d``, renormalized so the entries sum to exactly 1."""
    if d.exact:
        return d
    fr = [Fraction(float(v)) for v in d.probs.flat]
    if max_denominator is not None:
        fr = [f.limit_denominator(max_denominator) for f in fr]
    total = sum(fr, Fraction(0))
    arr = np.empty(len(fr), dtype=object)
    arr[:] = [f / total for f in fr]
    return JointDistribution(d.axes, arr.reshape(d.shape))


def as_float(d: JointDistribution) -> JointDistribution:
    if not d.exact:
        return d
    return JointDistribution(d.axes, np.asarray(d.probs, dtype=np.float64))


# -- JSON -------------------------------------------------------------------------


def _jsonable(sym):
    return list(sym) if isinstance(sym, tuple) else sym


def _from_json_symbol(sym):
    return tuple(_from_json_symbol(s) for s in sym) if isinstance(sym, list) else sym


def alphabet_to_json(a: Alphabet) -> dict:
    return {"name": a.name, "symbols": [_jsonable(s) for s in a.symbols]}


def alphabet_from_json(obj: Mapping) -> Alphabet:
    try:
        return Alphabet(str(obj["name"]), [_from_json_symbol(s) for s in obj["symbols"]])
    except (KeyError, TypeError) as exc:
        raise DistributionError(f"malformed alphabet: {exc}") from None


def to_json_dict(d: JointDistribution) -> dict:
    return {
        "axes": [alphabet_to_json(a) for a in d.axes],
        "probs": [float(v) for v in np.asarray(d.probs).flat],
    }


def from_json_dict(obj: Mapping) -> JointDistribution:
    """Parse the JSON distribution format; rejects tables off by more than 1e-9."""
    try:
        axes = [alphabet_from_json(a) for a in obj["axes"]]
        probs = np.asarray(obj["probs"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DistributionError(f"malformed distribution JSON: {exc}") from None
    size = math.prod(len(a) for a in axes)
    if probs.ndim != 1 or probs.size != size:
        raise DistributionError(f"expected a flat list of {size} probabilities, got {probs.size}")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise DistributionError("probabilities must be finite and non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > JSON_SUM_TOL:
        raise DistributionError(f"probabilities sum to {total!r}; deviation exceeds {JSON_SUM_TOL}")
    if abs(total - 1.0) > NORMALIZATION_TOL:
        probs = probs / total
    return JointDistribution(axes, probs)


def dumps(d: JointDistribution) -> str:
    return json.dumps(to_json_dict(d), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> JointDistribution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DistributionError(f"invalid JSON: {exc}") from None
    return from_json_dict(obj)


def load(path) -> JointDistribution:
    with open(path) as fh:
        return loads(fh.read())


def dump(d: JointDistribution, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(d) + "\n")
