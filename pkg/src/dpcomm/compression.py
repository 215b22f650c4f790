"""One-shot message compression and round-by-round protocol simulation.

The one-shot scheme: Alice, who knows ``N(.|x)``, takes the first entry of
the shared stream lying under her curve (``level < N(m|x)``). Bob marks as
candidates the entries under ``min(1, 2**c * N(m|y))``. Alice sends a short
pairwise-independent hash of her entry's index and Bob outputs the first
candidate whose index hashes to the same value. Whenever
``N(m|x) <= 2**c N(m|y)`` at Alice's sample her entry is one of Bob's
candidates, so Bob errs only if an earlier candidate collides.

Bob expects at most ``min(2**c, |M|)`` candidates before Alice's entry, so a
hash of ``ceil(min(c, log2|M|)) + ceil(log2(1/delta)) + 2`` bits keeps the
collision probability below ``delta / 4``. With the exceedance probability
at most ``delta`` the receiver's output differs from Alice's exact sample
with probability at most ``2 delta`` (plus stream truncation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dpcomm import randomness as rnd
from dpcomm.hashing import MAX_BITS, PairwiseHash
from dpcomm.info import (
    IDENTITY_TOL,
    Alphabet,
    JointDistribution,
    conditional_mutual_information,
    l1_distance,
    marginal,
    reorder,
    _names,
)
from dpcomm.sampling import HypothesisViolation, _single_axis, embed_from_kl, last_symbols, scan
from dpcomm.stats import empirical, l1_slack, rng_for, sample_cells

# Per-round overhead constant: a round with budget c costs at most
# (c + 5)/eps' + KAPPA_IMPL * log2(1/eps') bits whenever eps' <= 1/2.
KAPPA_IMPL = 5


class PreconditionError(HypothesisViolation):
    """A compression precondition fails; ``values`` holds the exact quantities."""


@dataclass(frozen=True)
class CompressionParams:
    cutoff: float = 0.0
    delta: float = 0.05
    budgets: tuple[float, ...] | None = None
    leakages: tuple[float, ...] | None = None
    eps_prime: float = 0.05
    rounds: int | None = None
    length: int | None = None

    def __post_init__(self):
        if not self.cutoff >= 0:
            raise ValueError("cutoff must be >= 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.eps_prime <= 0.5:
            raise ValueError("eps_prime must lie in (0, 1/2]")
        for name in ("budgets", "leakages"):
            vals = getattr(self, name)
            if vals is None:
                continue
            vals = tuple(float(v) for v in vals)
            object.__setattr__(self, name, vals)
            if any(not v >= 0 for v in vals):
                raise ValueError(f"{name} must be >= 0")
            if self.rounds is not None and len(vals) != self.rounds:
                raise ValueError(f"{name} must have one entry per round")
        if self.leakages is not None and any(v >= 1 for v in self.leakages):
            raise ValueError("leakages must be < 1")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    def bit_budget(self, budgets) -> float:
        """``(sum c_s + 5t)/eps' + KAPPA_IMPL * t * log2(1/eps')``."""
        t = len(budgets)
        return (sum(budgets) + 5 * t) / self.eps_prime + KAPPA_IMPL * t * math.log2(1 / self.eps_prime)


def hash_length(cutoff: float, delta: float, universe: int) -> int:
    spread = min(cutoff, math.log2(universe)) if universe > 1 else 0.0
    k = math.ceil(spread) + max(0, math.ceil(math.log2(1 / delta))) + 2
    return min(k, MAX_BITS)


def collision_bound(cutoff: float, bits: int, universe: int) -> float:
    """Bound on the chance an earlier candidate of Bob's matches Alice's hash."""
    return min(1.0, min(2.0 ** min(cutoff, 64), universe) * 2.0**-bits)


@dataclass(frozen=True, eq=False)
class BRBatch:
    alice: np.ndarray
    bob: np.ndarray
    alice_index: np.ndarray
    bob_index: np.ndarray
    alice_exhausted: np.ndarray
    bob_exhausted: np.ndarray
    bits: int
    collision_bound: float

    @property
    def agreed(self) -> np.ndarray:
        return (self.alice == self.bob) & ~self.alice_exhausted & ~self.bob_exhausted

    @property
    def exhausted(self) -> np.ndarray:
        return self.alice_exhausted | self.bob_exhausted


def br_compress_batch(nx_rows, ny_rows, seeds, cutoff: float, delta: float, length: int | None = None) -> BRBatch:
    """Vectorized one-shot compression; trial ``i`` uses stream ``seeds[i]``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = len(seeds)
    nx = np.broadcast_to(np.atleast_2d(np.asarray(nx_rows, dtype=np.float64)), (n, np.shape(nx_rows)[-1]))
    ny = np.broadcast_to(np.atleast_2d(np.asarray(ny_rows, dtype=np.float64)), (n, np.shape(ny_rows)[-1]))
    universe = nx.shape[1]
    length = rnd.default_length(universe) if length is None else length
    bits = hash_length(cutoff, delta, universe)
    h = PairwiseHash(seeds, bits)

    [(ia, a)] = scan(seeds, [rnd.thresholds(nx)], universe, length)
    a_exh = ia < 0
    if a_exh.any():
        a[a_exh] = last_symbols(seeds[a_exh], universe, length)
        ia[a_exh] = length - 1
    tag = h(ia)

    with np.errstate(over="ignore", invalid="ignore"):
        bob_p = np.where(ny > 0, np.minimum(1.0, ny * 2.0 ** min(cutoff, 1023.0)), 0.0)
    thr_b, alw_b = rnd.thresholds(bob_p)
    jb = np.full(n, -1, np.int64)
    b = np.full(n, -1, np.int64)
    active = np.arange(n)
    start, width = 0, max(8, 2 * universe)
    while active.size and start < length:
        stop = min(length, start + width)
        syms, lvls = rnd.entries(seeds[active], start, stop, universe)
        cand = rnd.accept(lvls, syms, thr_b[active], alw_b[active])
        j = np.broadcast_to(np.arange(start, stop, dtype=np.int64), cand.shape)
        match = cand & (h(j, rows=active) == tag[active, None])
        hit = match.any(axis=1)
        first = match.argmax(axis=1)
        rows = active[hit]
        jb[rows] = start + first[hit]
        b[rows] = syms[hit, first[hit]]
        active = active[~hit]
        start = stop
        width *= 2
    b_exh = jb < 0
    if b_exh.any():
        b[b_exh] = last_symbols(seeds[b_exh], universe, length)
    return BRBatch(a, b, ia, jb, a_exh, b_exh, bits, collision_bound(cutoff, bits, universe))


def br_compress(N_given_x, N_given_y, x, y, params: CompressionParams, stream: rnd.RandomnessStream):
    """One run on ``stream``: ``(m_alice, m_bob, bits_sent)`` as symbols."""
    gx = x if isinstance(x, tuple) and len(N_given_x.given_axes) > 1 else (x,)
    gy = y if isinstance(y, tuple) and len(N_given_y.given_axes) > 1 else (y,)
    nx = np.asarray(N_given_x.row(gx), dtype=np.float64).ravel()
    ny = np.asarray(N_given_y.row(gy), dtype=np.float64).ravel()
    if nx.size != stream.universe or ny.size != stream.universe:
        raise ValueError("kernels must be over the stream's universe")
    res = br_compress_batch(nx, ny, [stream.seed], params.cutoff, params.delta, stream.length)
    symbols = N_given_x.out_axes[0].symbols
    return symbols[int(res.alice[0])], symbols[int(res.bob[0])], res.bits


def _xym(d: JointDistribution, x, y, m) -> tuple[np.ndarray, tuple[Alphabet, Alphabet, Alphabet]]:
    d, xn = _single_axis(d, x, "+".join(_names(x)))
    d, yn = _single_axis(d, y, "+".join(_names(y)))
    d, mn = _single_axis(d, m, "+".join(_names(m)))
    d = reorder(marginal(d, [xn, yn, mn]), [xn, yn, mn])
    return np.asarray(d.probs, dtype=np.float64), d.axes


def _cond(joint: np.ndarray) -> np.ndarray:
    """Rows of ``joint`` normalized over the last axis (zero where undefined)."""
    den = joint.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, joint / np.where(den > 0, den, 1), 0.0)


def _log_ratio(num, den):
    """``log2(num/den)`` with ``+inf`` for ``den = 0 < num`` and ``-inf`` for ``num = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log2(num) - np.log2(den)
    return np.where(num > 0, np.where(den > 0, out, np.inf), -np.inf)


def log_ratio_exceedance(d: JointDistribution, cutoff: float, x="X", y="Y", m="M", strict: bool = True) -> float:
    """Exact ``Pr[log2 N(m|x)/N(m|y) > cutoff]`` with ``(x, y, m)`` drawn from ``d``.

    ``N(.|x)`` and ``N(.|y)`` are the conditionals of ``d`` itself; with
    ``strict=False`` the event uses ``>=``.
    """
    p, _ = _xym(d, x, y, m)
    nmx = _cond(p.sum(axis=1))
    nmy = _cond(p.sum(axis=0))
    ratio = _log_ratio(nmx[:, None, :], nmy[None, :, :])
    bad = ratio > cutoff if strict else ratio >= cutoff
    return float(p[(p > 0) & bad].sum())


def three_set_exceedance(d: JointDistribution, c: float, eps: float, eps_prime: float,
                         x="X", y="Y", m="M") -> dict:
    """The exact exceedance masses behind the single-message cutoff ``(c + 5)/eps'``.

    With ``N := (XY)(M|X)`` the log ratio ``log N(m|x)/N(m|y)`` splits into
    three terms, each exceeding its share of the cutoff on a set of
    ``M'``-mass at most ``eps'``. Returns those three masses (``g1``, ``g2``,
    ``g3``), the total exceedance under ``M'`` (bounded by ``3 eps'``) and
    under ``N`` (bounded by ``3 eps' + sqrt(eps)``).
    """
    p, _ = _xym(d, x, y, m)
    pxy = p.sum(axis=2)
    m_xy = _cond(p)
    m_x = _cond(p.sum(axis=1))
    pym = p.sum(axis=0)
    m_y = _cond(pym)
    nj = pxy[:, :, None] * m_x[:, None, :]
    nym = nj.sum(axis=0)
    n_y = _cond(nym)
    sup = p > 0
    l1 = _log_ratio(m_x[:, None, :], m_xy)
    l2 = _log_ratio(m_xy, m_y[None, :, :])
    l3 = _log_ratio(pym[None, :, :], nym[None, :, :])
    cut = (c + 5) / eps_prime
    ratio = _log_ratio(m_x[:, None, :], n_y[None, :, :])
    out = {
        "g1": float(p[sup & (l1 > (eps + 1) / eps_prime)].sum()),
        "g2": float(p[sup & (l2 > (c + 1) / eps_prime)].sum()),
        "g3": float(p[sup & (l3 > (eps + 1) / eps_prime)].sum()),
        "exceed_under_m": float(p[sup & (ratio >= cut)].sum()),
        "exceed_under_n": float(nj[(nj > 0) & (ratio >= cut)].sum()),
        "cutoff": cut,
        "set_bound": eps_prime,
        "bound_under_m": 3 * eps_prime,
        "bound_under_n": 3 * eps_prime + math.sqrt(eps),
    }
    return out


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Measured law of a simulation next to its target and certified bound."""

    simulated: JointDistribution
    target: JointDistribution
    bits_sent: tuple[int, ...]
    l1_to_target: float
    certified_bound: float
    slack: float
    trials: int
    agreement: float
    exhausted: int
    degenerate: int = 0
    diagnostics: dict = field(default_factory=dict)
    round_agreed: np.ndarray | None = None  # (trials, rounds) flags, when recorded

    @property
    def total_bits(self) -> int:
        return int(sum(self.bits_sent))

    @property
    def ok(self) -> bool:
        return self.l1_to_target <= self.certified_bound + self.slack

    def summary(self) -> dict:
        return {
            "bits_sent": list(self.bits_sent),
            "total_bits": self.total_bits,
            "l1_to_target": self.l1_to_target,
            "certified_bound": self.certified_bound,
            "slack": self.slack,
            "trials": self.trials,
            "agreement": self.agreement,
            "exhausted": self.exhausted,
            "degenerate": self.degenerate,
            "kappa_impl": KAPPA_IMPL,
            "ok": self.ok,
        }


def br_simulate(d_xyn: JointDistribution, params: CompressionParams, trials: int, seed: int,
                x="X", y="Y", m="M", sigma: float = 3.0) -> SimulationResult:
    """Run the one-shot scheme on inputs drawn from ``d_xyn`` and compare with ``(X, Y, N)``.

    Both preconditions are checked exactly first: ``Y - X - N`` must be a
    Markov chain (Alice's curve ``N(.|x)`` is the true message law) and the
    log-ratio exceedance must be at most ``delta``.
    """
    p, axes = _xym(d_xyn, x, y, m)
    leak = conditional_mutual_information(JointDistribution(axes, p), axes[1].name, axes[2].name, axes[0].name)
    if leak > IDENTITY_TOL:
        raise PreconditionError(f"N depends on Y given X (I = {leak:.3g}); sample it from X alone", {"leakage": leak})
    exceed = log_ratio_exceedance(d_xyn, params.cutoff, x, y, m)
    if exceed > params.delta:
        raise PreconditionError(
            f"log-ratio exceedance {exceed:.6g} above delta={params.delta}", {"exceedance": exceed}
        )
    target = JointDistribution(axes, p)
    nmx = _cond(p.sum(axis=1))
    nmy = _cond(p.sum(axis=0))
    inputs = JointDistribution(axes[:2], p.sum(axis=2))
    xi, yi = sample_cells(inputs, trials, rng_for(seed, "inputs"))
    seeds = rnd.trial_seeds(seed, trials)
    universe = len(axes[2])
    length = rnd.default_length(universe) if params.length is None else params.length
    res = br_compress_batch(nmx[xi], nmy[yi], seeds, params.cutoff, params.delta, length)
    sim = empirical(axes, (xi, yi, res.bob))
    trunc = rnd.exhaustion_bound(universe, length)
    return SimulationResult(
        simulated=sim,
        target=target,
        bits_sent=(res.bits,),
        l1_to_target=l1_distance(sim, target),
        certified_bound=2 * params.delta + trunc,
        slack=l1_slack(math.prod(target.shape), trials, sigma),
        trials=trials,
        agreement=float(res.agreed.mean()),
        exhausted=int(res.exhausted.sum()),
        diagnostics={
            "exceedance": exceed,
            "collision_bound": res.collision_bound,
            "truncation": trunc,
            "tight_bound": exceed + res.collision_bound + trunc,
        },
        round_agreed=res.agreed[:, None],
    )


# -- multi-round simulation ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Round:
    sender: str
    universe: int
    send_rows: np.ndarray
    recv_rows: np.ndarray
    send_defined: np.ndarray
    recv_defined: np.ndarray
    budget: float
    leakage: float
    cutoff: float
    delta: float
    length: int
    exceedance: float


@dataclass(frozen=True, eq=False)
class RoundTrials:
    """Per-trial outcome of a round-by-round simulation (message indices per round)."""

    canonical: list
    alice_copy: list
    bob_copy: list
    bits: tuple[int, ...]
    agreed: np.ndarray
    exhausted: np.ndarray
    degenerate: np.ndarray
    round_agreed: np.ndarray

    def copy_of(self, party: str) -> list:
        return self.alice_copy if party == "A" else self.bob_copy


class _Plan:
    """Per-round sender and receiver kernels computed from the source table.

    The table is arranged as ``(R, X, Y, M_1, ..., M_t)``; a missing ``R`` is a
    single-symbol axis.
    """

    def __init__(self, d: JointDistribution, x, y, r, messages, params: CompressionParams):
        d, xn = _single_axis(d, x, "+".join(_names(x)))
        d, yn = _single_axis(d, y, "+".join(_names(y)))
        if r is not None and len(_names(r)) > 0:
            d, rn = _single_axis(d, r, "+".join(_names(r)))
            keep = [rn]
        else:
            rn, keep = None, []
        if messages is None:
            used = {xn, yn} | set(keep)
            messages = [n for n in d.names if n not in used]
        messages = list(_names(messages))
        if not messages:
            raise ValueError("need at least one message axis")
        d = reorder(marginal(d, keep + [xn, yn] + messages), keep + [xn, yn] + messages)
        p = np.asarray(d.probs, dtype=np.float64)
        if rn is None:
            p = p[None]
        self.p = p
        self.x_alphabet, self.y_alphabet = d.alphabet(xn), d.alphabet(yn)
        self.r_alphabet = d.alphabet(rn) if rn is not None else None
        self.message_alphabets = tuple(d.alphabet(n) for n in messages)
        self.t = len(messages)
        if params.rounds is not None and params.rounds != self.t:
            raise ValueError(f"params are for {params.rounds} rounds, table has {self.t} messages")
        self.params = params
        self.rounds = [self._round(s) for s in range(1, self.t + 1)]

    def _round(self, s: int) -> _Round:
        t, params = self.t, self.params
        ps = self.p.sum(axis=tuple(range(3 + s, 3 + t))) if s < t else self.p
        sender = "A" if s % 2 == 1 else "B"
        own, other = (1, 2) if sender == "A" else (2, 1)
        k_send = _cond(ps.sum(axis=other, keepdims=True))
        nj = ps.sum(axis=-1, keepdims=True) * k_send
        k_recv = _cond(nj.sum(axis=own, keepdims=True))
        send_def = ps.sum(axis=(other, ps.ndim - 1)) > 0
        recv_def = nj.sum(axis=(own, ps.ndim - 1)) > 0
        universe = ps.shape[-1]
        # after dropping the summed party axis, the remaining party sits at axis 1
        k_send = np.moveaxis(np.squeeze(k_send, axis=other), 1, 0)
        k_recv = np.moveaxis(np.squeeze(k_recv, axis=own), 1, 0)
        send_def = np.moveaxis(send_def, 1, 0)
        recv_def = np.moveaxis(recv_def, 1, 0)
        k_send = np.where(send_def[..., None], k_send, 1.0 / universe)
        k_recv = np.where(recv_def[..., None], k_recv, 1.0 / universe)

        axes = [Alphabet.of_size(f"a{i}", n) for i, n in enumerate(ps.shape)]
        jd = JointDistribution(axes, ps)
        names = jd.names
        cond_rest = [names[0]] + list(names[3:-1])
        own_n, other_n, msg_n = names[own], names[other], names[-1]
        c_exact = conditional_mutual_information(jd, own_n, msg_n, [other_n] + cond_rest)
        e_exact = conditional_mutual_information(jd, other_n, msg_n, [own_n] + cond_rest)
        c_s = c_exact if params.budgets is None else params.budgets[s - 1]
        e_s = e_exact if params.leakages is None else params.leakages[s - 1]
        if c_exact > c_s + IDENTITY_TOL or e_exact > e_s + IDENTITY_TOL:
            raise PreconditionError(
                f"round {s}: information {c_exact:.6g} > budget {c_s:.6g} or leakage {e_exact:.6g} > {e_s:.6g}",
                {"round": s, "budget_exact": c_exact, "leakage_exact": e_exact, "budget": c_s, "leakage": e_s},
            )
        cutoff = (c_s + 5) / params.eps_prime
        delta = min(0.5, 3 * params.eps_prime + math.sqrt(e_s))
        exceed = self._exceedance(ps, nj, own, other, cutoff)
        length = rnd.default_length(universe) if params.length is None else params.length
        return _Round(sender, universe, k_send, k_recv, send_def, recv_def, c_s, e_s, cutoff, delta, length, exceed)

    @staticmethod
    def _exceedance(ps, nj, own, other, cutoff) -> float:
        k_send = _cond(ps.sum(axis=other, keepdims=True))
        k_recv = _cond(nj.sum(axis=own, keepdims=True))
        ratio = _log_ratio(k_send, k_recv)
        return float(nj[(nj > 0) & (ratio >= cutoff)].sum())

    @property
    def certified(self) -> float:
        eps_prime = self.params.eps_prime
        return sum(3 * math.sqrt(r.leakage) + 6 * eps_prime for r in self.rounds) + self.truncation

    @property
    def truncation(self) -> float:
        return sum(rnd.exhaustion_bound(r.universe, r.length) for r in self.rounds)

    def run(self, xi, yi, ra, rb, seeds):
        """Simulate every round; each party conditions on its own copy of the prefix.

        The canonical transcript is the receivers' decoded copies.
        """
        n = len(seeds)
        pre_a: list[np.ndarray] = []
        pre_b: list[np.ndarray] = []
        canonical = []
        bits = []
        agreed = np.ones(n, dtype=bool)
        exhausted = np.zeros(n, dtype=bool)
        degenerate = np.zeros(n, dtype=bool)
        per_round = []
        for s, rd in enumerate(self.rounds, start=1):
            if rd.sender == "A":
                sv, rv = (xi, ra, *pre_a), (yi, rb, *pre_b)
            else:
                sv, rv = (yi, rb, *pre_b), (xi, ra, *pre_a)
            degenerate |= ~rd.send_defined[sv] | ~rd.recv_defined[rv]
            res = br_compress_batch(
                rd.send_rows[sv], rd.recv_rows[rv], rnd.child_seeds(seeds, ("round", s)), rd.cutoff, rd.delta, rd.length
            )
            if rd.sender == "A":
                pre_a.append(res.alice)
                pre_b.append(res.bob)
            else:
                pre_b.append(res.alice)
                pre_a.append(res.bob)
            canonical.append(res.bob)
            bits.append(res.bits)
            agreed &= res.agreed
            exhausted |= res.exhausted
            per_round.append(res.agreed)
        return RoundTrials(canonical, pre_a, pre_b, tuple(bits), agreed, exhausted, degenerate,
                           np.stack(per_round, axis=1))

    def diagnostics(self) -> dict:
        return {
            "budgets": [r.budget for r in self.rounds],
            "leakages": [r.leakage for r in self.rounds],
            "cutoffs": [r.cutoff for r in self.rounds],
            "deltas": [r.delta for r in self.rounds],
            "exceedance": [r.exceedance for r in self.rounds],
            "truncation": self.truncation,
            "bit_budget": self.params.bit_budget([r.budget for r in self.rounds]),
        }


def simulate_multiround(d: JointDistribution, params: CompressionParams, trials: int, seed: int,
                        x="X", y="Y", r=None, messages=None, sigma: float = 3.0) -> SimulationResult:
    """Simulate the messages of ``d`` round by round with one-shot compression.

    Odd rounds are compressed from Alice (view ``X R M_<s``) to Bob (view
    ``Y R M_<s``), even rounds the other way. Per-round budgets ``c_s`` and
    leakages ``eps_s`` default to their exact values; supplied values are
    checked against the table. The certified bound is
    ``3 sum sqrt(eps_s) + 6 eps' t`` plus truncation.
    """
    plan = _Plan(d, x, y, r, messages, params)
    p = plan.p
    cells = JointDistribution([Alphabet.of_size("cell", math.prod(p.shape[:3]))],
                              p.sum(axis=tuple(range(3, p.ndim))).ravel())
    (flat,) = sample_cells(cells, trials, rng_for(seed, "inputs"))
    ri, xi, yi = np.unravel_index(flat, p.shape[:3])
    seeds = rnd.trial_seeds(seed, trials)
    run = plan.run(xi, yi, ri, ri, seeds)
    axes = ((plan.r_alphabet,) if plan.r_alphabet is not None else ()) + (plan.x_alphabet, plan.y_alphabet) + plan.message_alphabets
    cols = ((ri,) if plan.r_alphabet is not None else ()) + (xi, yi) + tuple(run.canonical)
    target = JointDistribution(axes, p if plan.r_alphabet is not None else p[0])
    sim = empirical(axes, cols)
    return SimulationResult(
        simulated=sim,
        target=target,
        bits_sent=run.bits,
        l1_to_target=l1_distance(sim, target),
        certified_bound=plan.certified,
        slack=l1_slack(math.prod(target.shape), trials, sigma),
        trials=trials,
        agreement=float(run.agreed.mean()),
        exhausted=int(run.exhausted.sum()),
        degenerate=int(run.degenerate.sum()),
        diagnostics=plan.diagnostics(),
        round_agreed=run.round_agreed,
    )


def compress_round(d_xym: JointDistribution, c: float, eps: float, eps_prime: float, trials: int, seed: int,
                   x="X", y="Y", m="M", sigma: float = 3.0) -> SimulationResult:
    """Single message from Alice to Bob given ``I(X:M|Y) <= c`` and ``I(Y:M|X) <= eps``."""
    params = CompressionParams(cutoff=(c + 5) / eps_prime, budgets=(c,), leakages=(eps,), eps_prime=eps_prime, rounds=1)
    res = simulate_multiround(d_xym, params, trials, seed, x=x, y=y, messages=[m] if isinstance(m, str) else m,
                              sigma=sigma)
    res.diagnostics.update(three_set_exceedance(d_xym, c, eps, eps_prime, x, y, m))
    return res


def _symbol_map(src: Alphabet, dst: Alphabet) -> np.ndarray:
    return np.array([dst.index(s) for s in src.symbols], dtype=np.int64)


class EmbeddedSimulator:
    """Zero-communication embedding of ``(X, Y)`` into ``(X'R', Y'R')`` followed by simulation.

    ``d_target`` carries the input axes under the same names as ``d_source``.
    """

    def __init__(self, d_target: JointDistribution, d_source: JointDistribution, params: CompressionParams,
                 x="X", y="Y", r="R", messages=None):
        self.plan = _Plan(d_source, x, y, r, messages, params)
        if self.plan.r_alphabet is None:
            raise ValueError("embedding needs a shared-randomness axis r")
        self.embedding = embed_from_kl(marginal(d_source, _names(x) + _names(y) + _names(r)), d_target, a=x, b=y, c=r)
        emb, plan = self.embedding, self.plan
        self._rmap = _symbol_map(emb.s_alphabet, plan.r_alphabet)
        self._xmap = _symbol_map(emb.x_alphabet, plan.x_alphabet)
        self._ymap = _symbol_map(emb.y_alphabet, plan.y_alphabet)

    @property
    def inputs(self) -> JointDistribution:
        """Law of ``(X, Y)``; its axes index the ``xi``, ``yi`` arguments of :meth:`run`."""
        return self.embedding.inputs

    @property
    def certified(self) -> float:
        return self.embedding.certified_error + self.plan.certified

    def run(self, xi, yi, seeds):
        """Returns ``(x, y, r_A, r_B, trials)`` in the source table's indexing."""
        ra, rb, _, emb_exh = self.embedding.sample_batch(xi, yi, rnd.child_seeds(seeds, "embed"))
        ra, rb = self._rmap[ra], self._rmap[rb]
        xs, ys = self._xmap[np.asarray(xi)], self._ymap[np.asarray(yi)]
        run = self.plan.run(xs, ys, ra, rb, seeds)
        run = RoundTrials(run.canonical, run.alice_copy, run.bob_copy, run.bits, run.agreed,
                          run.exhausted | emb_exh, run.degenerate, run.round_agreed)
        return xs, ys, ra, rb, run

    def target(self) -> JointDistribution:
        """``X' Y' R' R' M'`` with the shared randomness duplicated."""
        plan = self.plan
        p = plan.p
        tgt = np.einsum("rxy...,rq->xyrq...", p, np.eye(p.shape[0]))
        ra_alpha = plan.r_alphabet.renamed(f"{plan.r_alphabet.name}_A")
        rb_alpha = plan.r_alphabet.renamed(f"{plan.r_alphabet.name}_B")
        return JointDistribution((plan.x_alphabet, plan.y_alphabet, ra_alpha, rb_alpha) + plan.message_alphabets, tgt)

    def diagnostics(self) -> dict:
        diag = self.plan.diagnostics()
        diag.update(tau=self.embedding.certified_error, embedding=self.embedding.diagnostics)
        return diag


def embed_and_simulate(d_target: JointDistribution, d_source: JointDistribution, params: CompressionParams,
                       trials: int, seed: int, x="X", y="Y", r="R", messages=None,
                       sigma: float = 3.0) -> SimulationResult:
    """Embed ``(X, Y)`` into ``(X'R', Y'R')`` without communication, then simulate.

    Alice ends with ``R_A`` and Bob with ``R_B``; the result compares
    ``X Y R_A R_B M`` with ``X' Y' R' R' M'`` and certifies
    ``tau + 3 sum sqrt(eps_s) + 6 eps' t`` plus truncation.
    """
    sim_ = EmbeddedSimulator(d_target, d_source, params, x, y, r, messages)
    xi, yi = sample_cells(sim_.inputs, trials, rng_for(seed, "inputs"))
    seeds = rnd.trial_seeds(seed, trials)
    xs, ys, ra, rb, run = sim_.run(xi, yi, seeds)
    target = sim_.target()
    sim = empirical(target.axes, (xs, ys, ra, rb) + tuple(run.canonical))
    return SimulationResult(
        simulated=sim,
        target=target,
        bits_sent=run.bits,
        l1_to_target=l1_distance(sim, target),
        certified_bound=sim_.certified,
        slack=l1_slack(math.prod(target.shape), trials, sigma),
        trials=trials,
        agreement=float(run.agreed.mean()),
        exhausted=int(run.exhausted.sum()),
        degenerate=int(run.degenerate.sum()),
        diagnostics=sim_.diagnostics(),
        round_agreed=run.round_agreed,
    )
