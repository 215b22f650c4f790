"""Two-party t-message protocols, their transcript laws and distributional error.

Alice speaks in odd rounds, Bob in even rounds; the receiver of the last
message produces the output. Message functions map (speaker's input index,
previous message indices) to a message index and are evaluated on whole
numpy index arrays at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from dpcomm.info import (
    IDENTITY_TOL,
    Alphabet,
    DistributionError,
    JointDistribution,
    alphabet_from_json,
    alphabet_to_json,
    conditional_mutual_information,
    mutual_information,
    reorder,
)

DEFAULT_CELL_CAP = 10**7


class ProtocolError(ValueError):
    pass


class SizeError(ProtocolError):
    """Exact enumeration would exceed the configured cell cap."""


def _guard(cells: int, cap: int, what: str):
    if cells > cap:
        raise SizeError(f"{what} needs {cells} cells, above the cap of {cap}")


class LookupTable:
    """Dense message table indexed by ``(own input, m_1, ..., m_{s-1})``."""

    def __init__(self, table):
        arr = np.array(table, dtype=np.int64)
        arr.setflags(write=False)
        self.table = arr

    def __call__(self, own, prefix):
        return self.table[(np.asarray(own),) + tuple(np.asarray(m) for m in prefix)]

    def __repr__(self):
        return f"LookupTable(shape={self.table.shape})"


MessageFunction = Callable[[np.ndarray, Sequence[np.ndarray]], np.ndarray]


def materialize(fn: MessageFunction, shape: tuple[int, ...], cap: int = DEFAULT_CELL_CAP) -> np.ndarray:
    """Dense table of ``fn`` over every argument combination in ``shape``."""
    if isinstance(fn, LookupTable):
        return np.asarray(fn.table)
    _guard(math.prod(shape), cap, "materializing a message function")
    grid = np.indices(shape).reshape(len(shape), -1)
    return np.asarray(fn(grid[0], list(grid[1:]))).reshape(shape)


@dataclass(frozen=True, eq=False)
class DeterministicProtocol:
    x_alphabet: Alphabet
    y_alphabet: Alphabet
    z_alphabet: Alphabet
    message_alphabets: tuple[Alphabet, ...]
    message_functions: tuple[MessageFunction, ...]
    output_function: MessageFunction

    def __post_init__(self):
        object.__setattr__(self, "message_alphabets", tuple(self.message_alphabets))
        object.__setattr__(self, "message_functions", tuple(self.message_functions))
        t = len(self.message_alphabets)
        if t < 1 or len(self.message_functions) != t:
            raise ProtocolError("need one message function per round and t >= 1")
        names = [self.x_alphabet.name, self.y_alphabet.name] + [a.name for a in self.message_alphabets]
        if len(set(names)) != len(names):
            raise ProtocolError(f"input and message axis names must be distinct: {names}")
        for s, fn in enumerate(self.message_functions, start=1):
            if isinstance(fn, LookupTable):
                self._check_table(fn.table, self.arg_shape(s), len(self.message_alphabets[s - 1]), f"round {s}")
        if isinstance(self.output_function, LookupTable):
            self._check_table(self.output_function.table, self.arg_shape(t + 1), len(self.z_alphabet), "output")

    @staticmethod
    def _check_table(table, shape, size, what):
        if table.shape != shape:
            raise ProtocolError(f"{what} table has shape {table.shape}, expected {shape}")
        if table.size and (table.min() < 0 or table.max() >= size):
            raise ProtocolError(f"{what} table has values outside the alphabet")

    @property
    def t(self) -> int:
        return len(self.message_alphabets)

    @staticmethod
    def sender(s: int) -> str:
        """``'A'`` for odd rounds, ``'B'`` for even rounds (1-based)."""
        return "A" if s % 2 == 1 else "B"

    @property
    def output_party(self) -> str:
        return "B" if self.t % 2 == 1 else "A"

    def own_alphabet(self, party: str) -> Alphabet:
        return self.x_alphabet if party == "A" else self.y_alphabet

    def arg_shape(self, s: int) -> tuple[int, ...]:
        """Argument shape of round ``s``'s function; ``s = t + 1`` is the output map."""
        party = self.sender(s) if s <= self.t else self.output_party
        return (len(self.own_alphabet(party)),) + tuple(len(a) for a in self.message_alphabets[: s - 1])

    def run_indices(self, xi, yi):
        """Vectorized run on index arrays; returns ``(messages, z)``."""
        xi, yi = np.asarray(xi), np.asarray(yi)
        msgs: list[np.ndarray] = []
        for s, fn in enumerate(self.message_functions, start=1):
            own = xi if self.sender(s) == "A" else yi
            msgs.append(np.asarray(fn(own, msgs)))
        own = xi if self.output_party == "A" else yi
        return msgs, np.asarray(self.output_function(own, msgs))


def run(p: DeterministicProtocol, x, y):
    """Replay ``p`` on symbols ``x``, ``y``: ``(transcript symbols, output symbol)``."""
    xi = np.array([p.x_alphabet.index(x)])
    yi = np.array([p.y_alphabet.index(y)])
    msgs, z = p.run_indices(xi, yi)
    transcript = tuple(a.symbols[int(m[0])] for a, m in zip(p.message_alphabets, msgs))
    return transcript, p.z_alphabet.symbols[int(z[0])]


@dataclass(frozen=True, eq=False)
class PublicCoinProtocol:
    """A distribution over deterministic protocols of a common shape."""

    coin_alphabet: Alphabet
    coin_probs: np.ndarray
    branches: tuple[DeterministicProtocol, ...]

    def __post_init__(self):
        probs = np.asarray(self.coin_probs, dtype=np.float64).ravel()
        branches = tuple(self.branches)
        if len(branches) != len(self.coin_alphabet) or probs.size != len(branches):
            raise ProtocolError("need one branch and one probability per coin value")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ProtocolError("coin probabilities must form a distribution")
        first = branches[0]
        for b in branches[1:]:
            same = (
                b.x_alphabet == first.x_alphabet
                and b.y_alphabet == first.y_alphabet
                and b.z_alphabet == first.z_alphabet
                and b.message_alphabets == first.message_alphabets
            )
            if not same:
                raise ProtocolError("all branches must share inputs, outputs and message alphabets")
        probs.setflags(write=False)
        object.__setattr__(self, "coin_probs", probs)
        object.__setattr__(self, "branches", branches)

    @classmethod
    def deterministic(cls, p: DeterministicProtocol) -> "PublicCoinProtocol":
        return cls(Alphabet("coin", (0,)), np.ones(1), (p,))

    @property
    def shape_of(self) -> DeterministicProtocol:
        return self.branches[0]

    @property
    def t(self) -> int:
        return self.shape_of.t

    def fix_coin(self, coin) -> DeterministicProtocol:
        return self.branches[self.coin_alphabet.index(coin)]


def _as_public(p) -> PublicCoinProtocol:
    return p if isinstance(p, PublicCoinProtocol) else PublicCoinProtocol.deterministic(p)


def communication_cost(p) -> int:
    """Sum over rounds of ``ceil(log2 |M_s|)`` bits."""
    base = _as_public(p).shape_of
    return sum(math.ceil(math.log2(len(a))) if len(a) > 1 else 0 for a in base.message_alphabets)


@dataclass(frozen=True, eq=False)
class Relation:
    """Complete relation ``f`` over ``X x Y x Z`` as a boolean table."""

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    z_alphabet: Alphabet
    accepts: np.ndarray

    def __post_init__(self):
        shape = (len(self.x_alphabet), len(self.y_alphabet), len(self.z_alphabet))
        arr = np.asarray(self.accepts, dtype=bool).reshape(shape).copy()
        if not arr.any(axis=2).all():
            raise ProtocolError("relation is not complete: some (x, y) has no accepted z")
        arr.setflags(write=False)
        object.__setattr__(self, "accepts", arr)

    @classmethod
    def from_predicate(cls, x_alphabet, y_alphabet, z_alphabet, pred):
        arr = np.array(
            [[[bool(pred(x, y, z)) for z in z_alphabet.symbols] for y in y_alphabet.symbols] for x in x_alphabet.symbols]
        )
        return cls(x_alphabet, y_alphabet, z_alphabet, arr)

    def accepts_idx(self, xi, yi, zi) -> np.ndarray:
        return self.accepts[np.asarray(xi), np.asarray(yi), np.asarray(zi)]


def _input_table(p: DeterministicProtocol, mu: JointDistribution) -> np.ndarray:
    names = (p.x_alphabet.name, p.y_alphabet.name)
    try:
        mu = reorder(mu, names)
    except DistributionError:
        raise ProtocolError(f"input distribution must be over axes {names}, got {mu.names}") from None
    if mu.axes != (p.x_alphabet, p.y_alphabet):
        raise ProtocolError("input alphabets do not match the protocol's")
    return np.asarray(mu.probs, dtype=np.float64)


def transcript_distribution(p, inputs: JointDistribution, include_coins: bool = False,
                            cell_cap: int = DEFAULT_CELL_CAP) -> JointDistribution:
    """Exact law of ``(X, Y, M_1, ..., M_t)`` (coin axis first if requested)."""
    pc = _as_public(p)
    base = pc.shape_of
    mu = _input_table(base, inputs)
    msg_shape = tuple(len(a) for a in base.message_alphabets)
    coin_shape = (len(pc.coin_alphabet),) if include_coins else ()
    shape = coin_shape + mu.shape + msg_shape
    _guard(math.prod(shape), cell_cap, "transcript distribution")
    xi, yi = np.nonzero(mu > 0)
    w = mu[xi, yi]
    out = np.zeros(shape)
    for c, (cp, branch) in enumerate(zip(pc.coin_probs, pc.branches)):
        if cp == 0:
            continue
        msgs, _ = branch.run_indices(xi, yi)
        idx = ((np.full_like(xi, c),) if include_coins else ()) + (xi, yi) + tuple(msgs)
        np.add.at(out, idx, cp * w)
    axes = ((pc.coin_alphabet,) if include_coins else ()) + (base.x_alphabet, base.y_alphabet) + base.message_alphabets
    return JointDistribution(axes, out)


def _check_shapes(p: DeterministicProtocol, f: Relation):
    if (p.x_alphabet, p.y_alphabet, p.z_alphabet) != (f.x_alphabet, f.y_alphabet, f.z_alphabet):
        raise ProtocolError("protocol and relation alphabets differ")


def distributional_error(p, f: Relation, mu: JointDistribution, cell_cap: int = DEFAULT_CELL_CAP) -> float:
    """``Pr[(x, y, z) not in f]`` with ``(x, y) ~ mu`` and the public coin, by direct runs."""
    pc = _as_public(p)
    base = pc.shape_of
    _check_shapes(base, f)
    table = _input_table(base, mu)
    xi, yi = np.nonzero(table > 0)
    _guard(xi.size * len(pc.branches), cell_cap, "distributional error")
    w = table[xi, yi]
    err = 0.0
    for cp, branch in zip(pc.coin_probs, pc.branches):
        if cp == 0:
            continue
        _, z = branch.run_indices(xi, yi)
        err += cp * float(np.sum(w[~f.accepts_idx(xi, yi, z)]))
    return err


def distributional_error_via_transcript(p, f: Relation, mu: JointDistribution,
                                        cell_cap: int = DEFAULT_CELL_CAP) -> float:
    """Same quantity as :func:`distributional_error`, read off the transcript law."""
    pc = _as_public(p)
    base = pc.shape_of
    _check_shapes(base, f)
    td = transcript_distribution(pc, mu, include_coins=True, cell_cap=cell_cap)
    probs = np.asarray(td.probs)
    cells = np.nonzero(probs > 0)
    c, xi, yi, msgs = cells[0], cells[1], cells[2], list(cells[3:])
    err = 0.0
    for k, branch in enumerate(pc.branches):
        sel = c == k
        if not sel.any():
            continue
        own = xi[sel] if branch.output_party == "A" else yi[sel]
        z = np.asarray(branch.output_function(own, [m[sel] for m in msgs]))
        bad = ~f.accepts_idx(xi[sel], yi[sel], z)
        err += float(np.sum(probs[cells][sel][bad]))
    return err


def conditional_dependence_profile(p: DeterministicProtocol, mu: JointDistribution,
                                   cell_cap: int = DEFAULT_CELL_CAP) -> list[float]:
    """``I(X : Y | M_1 ... M_s)`` for ``s = 1..t``."""
    td = transcript_distribution(p, mu, cell_cap=cell_cap)
    x, y = p.x_alphabet.name, p.y_alphabet.name
    names = [a.name for a in p.message_alphabets]
    return [float(conditional_mutual_information(td, x, y, names[:s])) for s in range(1, p.t + 1)]


def verify_conditional_independence(p: DeterministicProtocol, mu_product: JointDistribution,
                                    cell_cap: int = DEFAULT_CELL_CAP) -> float:
    """Largest ``I(X : Y | M_{<=s})`` over rounds; requires a product input law."""
    x, y = p.x_alphabet.name, p.y_alphabet.name
    dep = mutual_information(mu_product, x, y)
    if dep > IDENTITY_TOL:
        raise ProtocolError(f"input distribution is not a product (I(X:Y) = {dep:.3g})")
    return max(conditional_dependence_profile(p, mu_product, cell_cap))


def random_deterministic_protocol(rng: np.random.Generator, x_size: int, y_size: int,
                                  message_sizes: Sequence[int], z_size: int) -> DeterministicProtocol:
    """Protocol with uniformly random lookup tables (for experiments and tests)."""
    xa, ya = Alphabet("X", tuple(range(x_size))), Alphabet("Y", tuple(range(y_size)))
    za = Alphabet("Z", tuple(range(z_size)))
    mas = tuple(Alphabet(f"M{s}", tuple(range(m))) for s, m in enumerate(message_sizes, start=1))
    t = len(mas)
    fns = []
    for s in range(1, t + 1):
        own = x_size if s % 2 == 1 else y_size
        fns.append(LookupTable(rng.integers(0, message_sizes[s - 1], size=(own,) + tuple(message_sizes[: s - 1]))))
    own = y_size if t % 2 == 1 else x_size
    out = LookupTable(rng.integers(0, z_size, size=(own,) + tuple(message_sizes)))
    return DeterministicProtocol(xa, ya, za, mas, tuple(fns), out)


# -- JSON ---------------------------------------------------------------------------


def protocol_to_json_dict(p, cell_cap: int = DEFAULT_CELL_CAP) -> dict:
    if isinstance(p, PublicCoinProtocol):
        return {
            "type": "public_coin",
            "coins": {"alphabet": alphabet_to_json(p.coin_alphabet), "probs": [float(v) for v in p.coin_probs]},
            "branches": [protocol_to_json_dict(b, cell_cap) for b in p.branches],
        }
    rounds = []
    for s, (a, fn) in enumerate(zip(p.message_alphabets, p.message_functions), start=1):
        table = materialize(fn, p.arg_shape(s), cell_cap)
        rounds.append({"sender": p.sender(s), "alphabet": alphabet_to_json(a), "table": table.ravel().tolist()})
    out = materialize(p.output_function, p.arg_shape(p.t + 1), cell_cap)
    return {
        "type": "deterministic",
        "x_alphabet": alphabet_to_json(p.x_alphabet),
        "y_alphabet": alphabet_to_json(p.y_alphabet),
        "z_alphabet": alphabet_to_json(p.z_alphabet),
        "rounds": rounds,
        "output": {"party": p.output_party, "table": out.ravel().tolist()},
    }


def protocol_from_json_dict(obj) -> DeterministicProtocol | PublicCoinProtocol:
    try:
        if obj.get("type") == "public_coin":
            coins = obj["coins"]
            return PublicCoinProtocol(
                alphabet_from_json(coins["alphabet"]),
                np.asarray(coins["probs"], dtype=np.float64),
                tuple(protocol_from_json_dict(b) for b in obj["branches"]),
            )
        xa = alphabet_from_json(obj["x_alphabet"])
        ya = alphabet_from_json(obj["y_alphabet"])
        za = alphabet_from_json(obj["z_alphabet"])
        mas = tuple(alphabet_from_json(r["alphabet"]) for r in obj["rounds"])
        fns = []
        for s, r in enumerate(obj["rounds"], start=1):
            expected = DeterministicProtocol.sender(s)
            if r.get("sender", expected) != expected:
                raise ProtocolError(f"round {s} must be sent by {expected}")
            own = len(xa) if expected == "A" else len(ya)
            shape = (own,) + tuple(len(a) for a in mas[: s - 1])
            fns.append(LookupTable(np.asarray(r["table"], dtype=np.int64).reshape(shape)))
        t = len(mas)
        own = len(ya) if t % 2 == 1 else len(xa)
        out = np.asarray(obj["output"]["table"], dtype=np.int64).reshape((own,) + tuple(len(a) for a in mas))
        return DeterministicProtocol(xa, ya, za, mas, tuple(fns), LookupTable(out))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProtocolError):
            raise
        raise ProtocolError(f"malformed protocol JSON: {exc}") from None


def relation_to_json_dict(f: Relation) -> dict:
    return {
        "x_alphabet": alphabet_to_json(f.x_alphabet),
        "y_alphabet": alphabet_to_json(f.y_alphabet),
        "z_alphabet": alphabet_to_json(f.z_alphabet),
        "accepts": np.asarray(f.accepts, dtype=int).ravel().tolist(),
    }


def relation_from_json_dict(obj) -> Relation:
    try:
        return Relation(
            alphabet_from_json(obj["x_alphabet"]),
            alphabet_from_json(obj["y_alphabet"]),
            alphabet_from_json(obj["z_alphabet"]),
            np.asarray(obj["accepts"], dtype=int),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProtocolError):
            raise
        raise ProtocolError(f"malformed relation JSON: {exc}") from None


def dumps(obj) -> str:
    data = relation_to_json_dict(obj) if isinstance(obj, Relation) else protocol_to_json_dict(obj)
    return json.dumps(data, sort_keys=True, separators=(",", ":"))
