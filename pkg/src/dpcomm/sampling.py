"""Correlated sampling over shared randomness, and embeddings built from it.

The sampler is first-acceptance rejection sampling over a shared stream of
``(symbol, level)`` entries: a party holding distribution ``P`` outputs the
symbol of the first entry whose level lies below ``P(symbol)``. Each party's
output has law exactly ``P``; two parties with ``P`` and ``Q`` agree unless
the first entry under ``max(P, Q)`` lies outside ``min(P, Q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dpcomm import randomness as rnd
from dpcomm.info import (
    Alphabet,
    ConditioningError,
    DistributionError,
    JointDistribution,
    conditional_kernel,
    l1_distance,
    markov_extend,
    markov_projection,
    marginal,
    merge_axes,
    relative_entropy,
    reorder,
    _names,
)
from dpcomm.stats import empirical, l1_slack, rng_for, sample_cells


class HypothesisViolation(ValueError):
    """An embedding hypothesis does not hold; ``values`` has every computed quantity."""

    def __init__(self, message, values):
        super().__init__(message)
        self.values = values


def _vector(p) -> np.ndarray:
    if isinstance(p, JointDistribution):
        return np.asarray(p.probs, dtype=np.float64).ravel()
    return np.asarray(p, dtype=np.float64).ravel()


def scan(seeds, criteria, universe: int, length: int):
    """First accepted entry per trial for each acceptance criterion.

    ``criteria`` is a list of ``(thr_rows, always_rows)`` pairs of shape
    ``(trials, universe)``. Returns a list of ``(index, symbol)`` arrays, with
    ``-1`` where no entry within ``length`` is accepted.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = len(seeds)
    out = [(np.full(n, -1, np.int64), np.full(n, -1, np.int64)) for _ in criteria]
    active = np.arange(n)
    start, width = 0, max(8, 2 * universe)
    while active.size and start < length:
        stop = min(length, start + width)
        syms, lvls = rnd.entries(seeds[active], start, stop, universe)
        still = np.zeros(active.size, dtype=bool)
        for (idx, sym), (thr, always) in zip(out, criteria):
            pending = idx[active] < 0
            acc = rnd.accept(lvls, syms, thr[active], always[active]) & pending[:, None]
            hit = acc.any(axis=1)
            first = acc.argmax(axis=1)
            rows = active[hit]
            idx[rows] = start + first[hit]
            sym[rows] = syms[hit, first[hit]]
            still |= pending & ~hit
        active = active[still]
        start = stop
        width *= 2
    return out


def last_symbols(seeds, universe: int, length: int) -> np.ndarray:
    syms, _ = rnd.entries(seeds, length - 1, length, universe)
    return syms[:, 0]


def correlated_sample_batch(p_rows, q_rows, seeds, length: int | None = None):
    """Vectorized sampler: trial ``i`` samples ``p_rows[i]`` and ``q_rows[i]`` on stream ``seeds[i]``.

    Rows may be a single vector (broadcast to every trial). Returns symbol
    indices ``a``, ``b`` and flags ``agreed``, ``exhausted``. Exhausted parties
    output the last entry's symbol and the trial counts as a disagreement.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = len(seeds)
    p_rows = np.broadcast_to(np.atleast_2d(np.asarray(p_rows, dtype=np.float64)), (n, np.shape(p_rows)[-1]))
    q_rows = np.broadcast_to(np.atleast_2d(np.asarray(q_rows, dtype=np.float64)), (n, np.shape(q_rows)[-1]))
    universe = p_rows.shape[1]
    if q_rows.shape[1] != universe:
        raise DistributionError("P and Q must share a universe")
    length = rnd.default_length(universe) if length is None else length
    (ia, a), (ib, b) = scan(seeds, [rnd.thresholds(p_rows), rnd.thresholds(q_rows)], universe, length)
    exhausted = (ia < 0) | (ib < 0)
    if exhausted.any():
        fallback = last_symbols(seeds[exhausted], universe, length)
        a[exhausted] = np.where(ia[exhausted] < 0, fallback, a[exhausted])
        b[exhausted] = np.where(ib[exhausted] < 0, fallback, b[exhausted])
    agreed = (ia == ib) & ~exhausted
    return a, b, agreed, exhausted


def correlated_sample(P, Q, stream: rnd.RandomnessStream):
    """One run of the sampler on ``stream``: ``(a, b, agreed, exhausted)``."""
    p, q = _vector(P), _vector(Q)
    if p.size != stream.universe or q.size != stream.universe:
        raise DistributionError("P and Q must be distributions over the stream's universe")
    a, b, agreed, exhausted = correlated_sample_batch(p, q, [stream.seed], stream.length)
    return int(a[0]), int(b[0]), bool(agreed[0]), bool(exhausted[0])


def disagreement_probability_exact(P, Q) -> float:
    """``1 - sum(min(P, Q)) / sum(max(P, Q))`` for the untruncated sampler.

    This is the probability that the two parties accept different stream
    entries, the event the batch sampler reports as ``agreed == False``. The
    output symbols can still coincide by chance, so it upper-bounds
    ``Pr[a != b]``, which is ``1 - trace(sampler_joint_exact(P, Q))``.
    """
    p, q = _vector(P), _vector(Q)
    return 1.0 - float(np.minimum(p, q).sum()) / float(np.maximum(p, q).sum())


def sampler_joint_exact(P, Q) -> np.ndarray:
    """Exact joint law of ``(a, b)`` for the untruncated sampler.

    The first entry under ``max(P, Q)`` lands under both curves with mass
    ``min``; otherwise the party that accepted keeps its symbol and the other
    waits for a fresh entry, whose symbol is then an independent draw from
    its own distribution.
    """
    p, q = _vector(P), _vector(Q)
    m = np.minimum(p, q)
    total = float(np.maximum(p, q).sum())
    return (np.diag(m) + np.outer(p - m, q) + np.outer(p, q - m)) / total


# -- embeddings ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    """Local maps ``x -> s`` and ``y -> s`` driven by one shared stream.

    ``alice_rows[x]`` (resp. ``bob_rows[y]``) is the distribution the party
    samples from via the correlated sampler. ``target`` is the law over
    ``(X, Y, S_A, S_B)`` the embedding approximates, ``inputs`` the law of
    ``(X, Y)`` it is fed.
    """

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    s_alphabet: Alphabet
    alice_rows: np.ndarray
    bob_rows: np.ndarray
    inputs: JointDistribution
    target: JointDistribution
    eps: float
    certified_error: float
    length: int
    diagnostics: dict = field(default_factory=dict)

    def f_A(self, x, stream: rnd.RandomnessStream):
        i = self.x_alphabet.index(x)
        a, _, _, _ = correlated_sample_batch(self.alice_rows[i], self.alice_rows[i], [stream.seed], self.length)
        return self.s_alphabet.symbols[a[0]]

    def f_B(self, y, stream: rnd.RandomnessStream):
        j = self.y_alphabet.index(y)
        b, _, _, _ = correlated_sample_batch(self.bob_rows[j], self.bob_rows[j], [stream.seed], self.length)
        return self.s_alphabet.symbols[b[0]]

    def sample_batch(self, x_idx, y_idx, seeds):
        """Both parties' outputs (as indices into ``s_alphabet``) per trial."""
        return correlated_sample_batch(self.alice_rows[x_idx], self.bob_rows[y_idx], seeds, self.length)

    def law_exact(self) -> JointDistribution:
        """Exact law of ``(X, Y, f_A(X), f_B(Y))`` for the untruncated sampler."""
        px = np.asarray(self.inputs.probs, dtype=np.float64)
        nx, ny, ns = len(self.x_alphabet), len(self.y_alphabet), len(self.s_alphabet)
        out = np.zeros((nx, ny, ns, ns))
        for i in range(nx):
            for j in range(ny):
                if px[i, j] > 0:
                    out[i, j] = px[i, j] * sampler_joint_exact(self.alice_rows[i], self.bob_rows[j])
        return JointDistribution(self.target.axes, out)

    def error_exact(self) -> float:
        return l1_distance(self.law_exact(), self.target)

    def measure(self, trials: int, seed: int, sigma: float = 3.0) -> "EmbeddingMeasurement":
        rng = rng_for(seed, "embedding-inputs")
        xi, yi = sample_cells(self.inputs, trials, rng)
        seeds = rnd.trial_seeds(seed, trials)
        a, b, agreed, exhausted = self.sample_batch(xi, yi, seeds)
        emp = empirical(self.target.axes, (xi, yi, a, b))
        return EmbeddingMeasurement(
            measured_l1=l1_distance(emp, self.target),
            exact_l1=self.error_exact(),
            certified=self.certified_error,
            slack=l1_slack(math.prod(self.target.shape), trials, sigma),
            trials=trials,
            agreement=float(agreed.mean()),
            exhausted=int(exhausted.sum()),
        )


@dataclass(frozen=True)
class EmbeddingMeasurement:
    measured_l1: float
    exact_l1: float
    certified: float
    slack: float
    trials: int
    agreement: float
    exhausted: int

    @property
    def ok(self) -> bool:
        return self.measured_l1 <= self.certified + self.slack


def _single_axis(d: JointDistribution, group, name: str) -> tuple[JointDistribution, str]:
    group = _names(group)
    if len(group) == 1:
        return d, group[0]
    return merge_axes(d, group, name), name


def _rows(d: JointDistribution, given: str, out: str, fallback: np.ndarray) -> np.ndarray:
    k = conditional_kernel(d, given, out)
    rows = np.array(k.rows, dtype=np.float64)
    rows[~k.defined] = fallback
    return rows


def _target(xyz: JointDistribution, x: str, y: str, s: str) -> JointDistribution:
    """Law of ``(X, Y, S, S)`` from a joint over ``x, y, s``."""
    d = reorder(marginal(xyz, [x, y, s]), [x, y, s])
    ns = d.shape[2]
    probs = np.einsum("ijk,kl->ijkl", np.asarray(d.probs, dtype=np.float64), np.eye(ns))
    axes = d.axes[:2] + (d.axes[2].renamed(f"{s}_A"), d.axes[2].renamed(f"{s}_B"))
    return JointDistribution(axes, probs)


def embed_from_markov_closeness(d_sxy: JointDistribution, s="S", x="X", y="Y", length: int | None = None) -> EmbeddingSpec:
    """Embed ``(X, Y)`` in ``(XS, YS)`` by correlated sampling of ``S|X`` and ``S|Y``.

    ``eps = max(||SXY - (XY)(S|X)||, ||SXY - (XY)(S|Y)||)`` and the certified
    error is ``4 eps`` plus the truncation term.
    """
    d, s = _single_axis(d_sxy, s, "S")
    d, x = _single_axis(d, x, "X")
    d, y = _single_axis(d, y, "Y")
    d = reorder(marginal(d, [x, y, s]), [x, y, s])
    eps_x = l1_distance(d, markov_projection(d, y, x, s))
    eps_y = l1_distance(d, markov_projection(d, x, y, s))
    eps = max(eps_x, eps_y)
    ns = len(d.alphabet(s))
    length = rnd.default_length(ns) if length is None else length
    trunc = 2 * rnd.exhaustion_bound(ns, length)
    s_marg = np.asarray(marginal(d, s).probs, dtype=np.float64)
    return EmbeddingSpec(
        x_alphabet=d.alphabet(x),
        y_alphabet=d.alphabet(y),
        s_alphabet=d.alphabet(s),
        alice_rows=_rows(d, x, s, s_marg),
        bob_rows=_rows(d, y, s, s_marg),
        inputs=reorder(marginal(d, [x, y]), [x, y]),
        target=_target(d, x, y, s),
        eps=eps,
        certified_error=min(1.0, 4 * eps + trunc),
        length=length,
        diagnostics={"l1_markov_given_x": eps_x, "l1_markov_given_y": eps_y, "truncation": trunc},
    )


def kl_hypotheses(d_abc: JointDistribution, d_ab: JointDistribution, a="A", b="B", c="C") -> dict:
    """The three divergences bounding an embedding, plus the intermediate l1 terms.

    ``d_ab`` must carry axes named like ``a`` and ``b`` in ``d_abc``.
    """
    a, b, c = _names(a), _names(b), _names(c)
    src = reorder(marginal(d_abc, a + b + c), a + b + c)
    tgt = reorder(marginal(d_ab, a + b), a + b)
    out = {"kl_inputs": relative_entropy(marginal(src, a + b), tgt)}
    for name, known, other in (("kl_bob_given_alice", a, b), ("kl_alice_given_bob", b, a)):
        try:
            ref = markov_extend(marginal(src, known + c), conditional_kernel(tgt, known, other))
            out[name] = relative_entropy(src, ref)
        except ConditioningError:
            out[name] = math.inf
    out["kl_markov_given_alice"] = relative_entropy(src, markov_projection(src, b, a, c))
    out["kl_markov_given_bob"] = relative_entropy(src, markov_projection(src, a, b, c))
    out["l1_markov_given_alice"] = l1_distance(src, markov_projection(src, b, a, c))
    out["l1_markov_given_bob"] = l1_distance(src, markov_projection(src, a, b, c))
    out["l1_inputs"] = l1_distance(marginal(src, a + b), tgt)
    out["eps"] = max(out["kl_inputs"], out["kl_bob_given_alice"], out["kl_alice_given_bob"])
    return out


def embed_from_kl(d_abc: JointDistribution, d_ab: JointDistribution, a="A", b="B", c="C",
                  eps: float | None = None, length: int | None = None) -> EmbeddingSpec:
    """Embed ``(A, B)`` in ``(A'C', B'C')`` from three divergence bounds.

    Alice samples ``C'|A'=a`` and Bob ``C'|B'=b`` with the correlated sampler;
    the certified error is ``5 sqrt(eps)`` plus truncation, with ``eps`` the
    largest of the three hypotheses. If ``eps`` is given and any hypothesis
    exceeds it (or is infinite), :class:`HypothesisViolation` is raised.
    """
    a, b, c = _names(a), _names(b), _names(c)
    h = kl_hypotheses(d_abc, d_ab, a, b, c)
    names = ("kl_inputs", "kl_bob_given_alice", "kl_alice_given_bob")
    bad = [n for n in names if not math.isfinite(h[n]) or (eps is not None and h[n] > eps)]
    if bad:
        detail = ", ".join(f"{n}={h[n]:.6g}" for n in bad)
        raise HypothesisViolation(f"embedding hypotheses violated: {detail}", h)
    src = reorder(marginal(d_abc, a + b + c), a + b + c)
    tgt = reorder(marginal(d_ab, a + b), a + b)
    src, cn = _single_axis(src, c, "C")
    src, an = _single_axis(src, a, "A")
    src, bn = _single_axis(src, b, "B")
    tgt, _ = _single_axis(tgt, a, "A")
    tgt, _ = _single_axis(tgt, b, "B")
    src = reorder(src, [an, bn, cn])
    tgt = reorder(tgt, [an, bn])
    e = h["eps"] if eps is None else eps
    nc = len(src.alphabet(cn))
    length = rnd.default_length(nc) if length is None else length
    trunc = 2 * rnd.exhaustion_bound(nc, length)
    c_marg = np.asarray(marginal(src, cn).probs, dtype=np.float64)
    return EmbeddingSpec(
        x_alphabet=src.alphabet(an),
        y_alphabet=src.alphabet(bn),
        s_alphabet=src.alphabet(cn),
        alice_rows=_rows(src, an, cn, c_marg),
        bob_rows=_rows(src, bn, cn, c_marg),
        inputs=tgt,
        target=_target(src, an, bn, cn),
        eps=h["eps"],
        certified_error=min(1.0, 5 * math.sqrt(e) + trunc),
        length=length,
        diagnostics=dict(h, truncation=trunc),
    )
