"""Experiments on k-fold protocols: success decay, per-coordinate information
quantities, and the single-coordinate protocol extracted from a k-fold one.

Everything here is exact enumeration over ``mu^k`` (times public coins, and
times the direction bits ``D`` for the coordinate analysis), so it is meant
for tiny alphabets and ``k <= 4``.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from dpcomm import randomness as rnd
from dpcomm.compression import CompressionParams, EmbeddedSimulator, SimulationResult
from dpcomm.info import Alphabet, JointDistribution, l1_distance
from dpcomm.problems import ProductRelation, product_inputs
from dpcomm.protocols import DEFAULT_CELL_CAP, DeterministicProtocol, PublicCoinProtocol, SizeError, _as_public, communication_cost
from dpcomm.stats import empirical, l1_slack, rng_for, sample_cells, wilson_interval


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    trials: int = 10_000
    tolerance: float = 1e-9
    cell_cap: int = DEFAULT_CELL_CAP
    out: str | None = None
    eps: float = 0.1
    t: int = 1
    k: int = 2
    eps_prime: float = 0.05
    delta: float | None = None
    delta1: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")

    @property
    def delta_value(self) -> float:
        """Closeness threshold, ``eps^2 / (7500 t^2)`` unless overridden."""
        return self.eps**2 / (7500 * self.t**2) if self.delta is None else self.delta

    @property
    def delta1_value(self) -> float:
        """Communication fraction, ``eps / (3000 t)`` unless overridden."""
        return self.eps / (3000 * self.t) if self.delta1 is None else self.delta1


def _product_setup(f, mu: JointDistribution, k: int, cap: int):
    fk = f if isinstance(f, ProductRelation) else ProductRelation(f, k)
    if fk.k != k:
        raise ValueError(f"relation is {fk.k}-fold, expected {k}")
    muk = product_inputs(mu, k)
    if np.asarray(muk.probs).size > cap:
        raise SizeError("input space exceeds the cell cap")
    return fk, muk


# -- success decay ---------------------------------------------------------------------


def success_table(p, f, mu: JointDistribution, k: int, cap: int = DEFAULT_CELL_CAP) -> np.ndarray:
    """Exact law of the success flags ``(T_1, ..., T_k)`` as a ``(2,) * k`` array."""
    pc = _as_public(p)
    fk, muk = _product_setup(f, mu, k, cap)
    table = np.asarray(muk.probs, dtype=np.float64)
    xi, yi = np.nonzero(table > 0)
    _guard_cells(xi.size * len(pc.branches), cap)
    w = table[xi, yi]
    out = np.zeros(2**k)
    weights = 1 << np.arange(k)[::-1]
    for cp, branch in zip(pc.coin_probs, pc.branches):
        if cp == 0:
            continue
        _, z = branch.run_indices(xi, yi)
        flags = fk.coordinate_accepts(xi, yi, z).astype(np.int64)
        np.add.at(out, weights @ flags, cp * w)
    return out.reshape((2,) * k)


def _guard_cells(cells: int, cap: int):
    if cells > cap:
        raise SizeError(f"needs {cells} cells, above the cap of {cap}")


def conditional_success(table: np.ndarray, given, j: int) -> float:
    """``Pr[T_j = 1 | T_i = 1 for all i in given]`` (nan if the event has probability 0)."""
    sel = [slice(None)] * table.ndim
    for i in given:
        sel[i] = 1
    sub = table[tuple(sel)]
    den = float(sub.sum())
    if den == 0:
        return math.nan
    axis = j - sum(1 for i in given if i < j)
    return float(np.take(sub, 1, axis=axis).sum()) / den


def prefix_success(table: np.ndarray, given) -> float:
    sel = [slice(None)] * table.ndim
    for i in given:
        sel[i] = 1
    return float(table[tuple(sel)].sum())


@dataclass(frozen=True)
class DecayTable:
    k: int
    order: tuple[int, ...]
    prefix_success: tuple[float, ...]
    conditional: tuple[float, ...]
    marginal: tuple[float, ...]

    def rows(self) -> list[dict]:
        """One row per ``r``: ``Pr[T^(r) = 1]`` and the next coordinate's conditional success."""
        out = []
        for r in range(self.k + 1):
            nxt = r < self.k
            out.append({
                "r": r,
                "prefix_success": self.prefix_success[r],
                "next_coordinate": self.order[r] if nxt else "",
                "conditional_success": self.conditional[r] if nxt else "",
                "marginal_success": self.marginal[r] if nxt else "",
            })
        return out


def direct_product_decay(p, f, mu: JointDistribution, k: int, order=None, cap: int = DEFAULT_CELL_CAP) -> DecayTable:
    """Exact ``Pr[T^(r) = 1]`` along a coordinate order.

    Without ``order`` the next coordinate is the one of least conditional
    success given the coordinates already chosen (ties go to the lowest
    index).
    """
    table = success_table(p, f, mu, k, cap)
    chosen: list[int] = []
    cond, marg = [], []
    for r in range(k):
        rest = [j for j in range(k) if j not in chosen]
        if order is not None:
            j = order[r]
        else:
            vals = [conditional_success(table, chosen, j) for j in rest]
            vals = [math.inf if math.isnan(v) else v for v in vals]
            j = rest[int(np.argmin(vals))]
        cond.append(conditional_success(table, chosen, j))
        marg.append(prefix_success(table, [j]))
        chosen.append(j)
    prefix = tuple(prefix_success(table, chosen[:r]) for r in range(k + 1))
    return DecayTable(k, tuple(chosen), prefix, tuple(cond), tuple(marg))


# -- coordinate analysis ------------------------------------------------------------------


class _Points:
    """Every ``(x, y, d)`` with its probability, the run of ``Q`` on it, and derived columns."""

    def __init__(self, p: DeterministicProtocol, f, mu: JointDistribution, k: int, cap: int):
        fk, muk = _product_setup(f, mu, k, cap)
        nx, ny = len(f.x_alphabet), len(f.y_alphabet)
        table = np.asarray(muk.probs, dtype=np.float64)
        _guard_cells(table.size * 2**k, cap)
        xf, yf, dd = (a.ravel() for a in np.indices(table.shape + (2**k,)))
        w = table[xf, yf] / 2**k
        keep = w > 0
        self.w, self.xf, self.yf = w[keep], xf[keep], yf[keep]
        self.x = np.stack(np.unravel_index(self.xf, (nx,) * k))
        self.y = np.stack(np.unravel_index(self.yf, (ny,) * k))
        self.d = np.stack(np.unravel_index(dd[keep], (2,) * k))
        self.u = np.where(self.d == 0, self.x, self.y)
        msgs, z = p.run_indices(self.xf, self.yf)
        self.m = [np.asarray(m) for m in msgs]
        self.z = np.asarray(z)
        self.T = fk.coordinate_accepts(self.xf, self.yf, self.z)
        self.k = k
        self.mu = np.asarray(mu.probs, dtype=np.float64)
        self.muk = table

    def r_columns(self, j: int, C) -> list[np.ndarray]:
        """``R_j = D_{-j} U_{-j} X_{C u [j-1]} Y_{C u [j-1]}`` as columns."""
        others = [i for i in range(self.k) if i != j]
        S = sorted(set(C) | set(range(j)))
        return [self.d[i] for i in others] + [self.u[i] for i in others] + [self.x[i] for i in S] + [self.y[i] for i in S]


def _codes(cols) -> np.ndarray:
    if not cols:
        return None
    return np.unique(np.stack(cols), axis=1, return_inverse=True)[1].ravel()


def _group_prob(w: np.ndarray, cols) -> np.ndarray:
    """Per point, the total weight of points sharing its values on ``cols``."""
    if not cols:
        return np.full(w.shape, w.sum())
    inv = _codes(cols)
    return np.bincount(inv, weights=w)[inv]


def _expect_log(w: np.ndarray, num: np.ndarray, den: np.ndarray) -> float:
    sel = w > 0
    return float(np.sum(w[sel] * (np.log2(num[sel]) - np.log2(den[sel]))))


def _cmi(w, a, b, c) -> float:
    """``I(A : B | C)`` under point weights ``w`` (columns given as lists)."""
    pabc, pc = _group_prob(w, a + b + c), _group_prob(w, c)
    pac, pbc = _group_prob(w, a + c), _group_prob(w, b + c)
    return max(0.0, _expect_log(w, pabc * pc, pac * pbc))


QUANTITIES = ("kl_inputs", "kl_y_given_x", "kl_x_given_y", "budget", "leakage")


@dataclass(frozen=True)
class CoordinateAnalysis:
    C: tuple[int, ...]
    success_probability: float
    conditional_success: dict
    quantities: dict
    thresholds: dict
    satisfied: dict
    sanity: dict
    params: dict = field(default_factory=dict)

    @property
    def sanity_ok(self) -> bool:
        return all(v["ok"] for v in self.sanity.values())

    def rows(self) -> list[dict]:
        out = []
        for j in sorted(self.quantities):
            row = {"coordinate": j, "conditional_success": self.conditional_success[j]}
            row.update(self.quantities[j])
            row["satisfied"] = self.satisfied[j]
            out.append(row)
        return out


def _deterministic(p) -> DeterministicProtocol:
    if isinstance(p, PublicCoinProtocol):
        if len(p.branches) != 1:
            raise ValueError("coordinate analysis needs a deterministic protocol (fix the coins first)")
        return p.branches[0]
    return p


def _conditioned(pts: _Points, C) -> tuple[np.ndarray, float]:
    mask = pts.T[list(C)].all(axis=0) if C else np.ones(pts.w.shape, dtype=bool)
    prob = float(pts.w[mask].sum())
    if prob <= 0:
        raise ValueError(f"Pr[T^(r) = 1] = 0 for C = {tuple(C)}")
    return np.where(mask, pts.w / prob, 0.0), prob


def analyze_coordinates(p, f, mu: JointDistribution, k: int, C=(), delta: float | None = None,
                        delta1: float | None = None, c: float | None = None, eps: float = 0.1,
                        kappa: float | None = None, cap: int = DEFAULT_CELL_CAP) -> CoordinateAnalysis:
    """The five per-coordinate quantities for ``j`` outside ``C``, conditioned on ``T^(r) = 1``.

    ``kl_inputs = D(X1_j Y1_j || X_j Y_j)``;
    ``kl_y_given_x = E_{r_j, x_j} D(Y1_j | r_j x_j || Y_j | x_j)`` and its mirror;
    ``budget`` sums ``I(X1_j : M1_s | R1_j Y1_j M1_<s)`` over odd ``s`` and the mirror
    over even ``s``; ``leakage`` is the complementary sum. A coordinate is
    flagged when the three divergences are at most ``12 delta``, the budget
    at most ``12 delta1 c`` and the leakage at most ``12 delta t``.

    The unspecified constant ``kappa`` is never asserted; when given, the
    single-instance cost ``c + kappa t^2 / eps^2`` it implies is reported.
    """
    q = _deterministic(p)
    C = tuple(sorted(C))
    pts = _Points(q, f, mu, k, cap)
    w1, prob = _conditioned(pts, C)
    t = q.t
    cfg = ExperimentConfig(eps=eps, t=t, k=k, delta=delta, delta1=delta1)
    delta_v, delta1_v = cfg.delta_value, cfg.delta1_value
    cost = communication_cost(q)
    c_v = cost / (delta1_v * k) if c is None else c
    mu_tab = pts.mu
    mu_y_given_x = mu_tab / mu_tab.sum(axis=1, keepdims=True).clip(min=1e-300)
    mu_x_given_y = mu_tab / mu_tab.sum(axis=0, keepdims=True).clip(min=1e-300)

    quantities, cond, satisfied = {}, {}, {}
    for j in range(k):
        if j in C:
            continue
        xj, yj = pts.x[j], pts.y[j]
        rj = pts.r_columns(j, C)
        q1 = _expect_log(w1, _group_prob(w1, [xj, yj]), mu_tab[xj, yj])
        q2 = _expect_log(w1, _group_prob(w1, rj + [xj, yj]), _group_prob(w1, rj + [xj]) * mu_y_given_x[xj, yj])
        q3 = _expect_log(w1, _group_prob(w1, rj + [xj, yj]), _group_prob(w1, rj + [yj]) * mu_x_given_y[xj, yj])
        budget = leakage = 0.0
        for s in range(1, t + 1):
            prev = pts.m[: s - 1]
            ms = [pts.m[s - 1]]
            to_x = _cmi(w1, [xj], ms, rj + [yj] + prev)
            to_y = _cmi(w1, [yj], ms, rj + [xj] + prev)
            if s % 2 == 1:
                budget, leakage = budget + to_x, leakage + to_y
            else:
                budget, leakage = budget + to_y, leakage + to_x
        quantities[j] = dict(zip(QUANTITIES, (max(q1, 0.0), max(q2, 0.0), max(q3, 0.0), budget, leakage)))
        cond[j] = float(np.sum(w1[pts.T[j]]))
    thresholds = {
        "kl_inputs": 12 * delta_v,
        "kl_y_given_x": 12 * delta_v,
        "kl_x_given_y": 12 * delta_v,
        "budget": 12 * delta1_v * c_v,
        "leakage": 12 * delta_v * t,
    }
    for j, qs in quantities.items():
        satisfied[j] = all(qs[name] <= thresholds[name] for name in QUANTITIES)

    # global quantities the per-coordinate sums are bounded by
    sel = w1 > 0
    dinf = float(np.max(np.log2(w1[sel] / pts.w[sel])))
    pxy1 = _group_prob(w1, [pts.xf, pts.yf])
    d_inputs = _expect_log(w1, pxy1, pts.muk[pts.xf, pts.yf])
    pall = _group_prob(w1, [pts.xf, pts.yf, *pts.d])
    d_full = _expect_log(w1, pall, pts.muk[pts.xf, pts.yf] / 2**k)
    tol = 1e-9
    sums = {name: sum(qs[name] for qs in quantities.values()) for name in QUANTITIES}
    sanity = {
        "kl_inputs_vs_min_entropy": {"lhs": sums["kl_inputs"], "rhs": dinf},
        "half_conditional_kl_vs_kl": {"lhs": 0.5 * (sums["kl_y_given_x"] + sums["kl_x_given_y"]), "rhs": d_full},
        "budget_vs_cost": {"lhs": sums["budget"], "rhs": 2.0 * cost},
        "leakage_vs_kl": {"lhs": sums["leakage"], "rhs": 2.0 * t * d_full},
    }
    for v in sanity.values():
        v["ok"] = v["lhs"] <= v["rhs"] + tol
    return CoordinateAnalysis(
        C=C,
        success_probability=prob,
        conditional_success=cond,
        quantities=quantities,
        thresholds=thresholds,
        satisfied=satisfied,
        sanity=sanity,
        params={"delta": delta_v, "delta1": delta1_v, "c": c_v, "cost": cost, "t": t, "k": k,
                "relative_min_entropy": dinf, "kl_full": d_full, "kl_inputs_full": d_inputs,
                "kappa": kappa, "implied_single_cost": None if kappa is None else c_v + kappa * t**2 / eps**2},
    )


# -- end-to-end single-coordinate protocol --------------------------------------------


@dataclass(frozen=True, eq=False)
class PipelineResult:
    coordinate: int
    C: tuple[int, ...]
    simulation: SimulationResult
    conditional_success: float
    composed_error: float
    composed_error_interval: tuple[float, float]
    composed_error_bound: float
    fixed_coin_errors: tuple[float, ...]
    base_error: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def best_fixed_coin_error(self) -> float:
        return min(self.fixed_coin_errors)

    @property
    def average_fixed_coin_error(self) -> float:
        return float(np.mean(self.fixed_coin_errors))

    @property
    def coin_fixing_ok(self) -> bool:
        return self.best_fixed_coin_error <= self.average_fixed_coin_error + 1e-12

    def summary(self) -> dict:
        return {
            "coordinate": self.coordinate,
            "C": list(self.C),
            "simulation": self.simulation.summary(),
            "conditional_success": self.conditional_success,
            "composed_error": self.composed_error,
            "composed_error_interval": list(self.composed_error_interval),
            "composed_error_bound": self.composed_error_bound,
            "best_fixed_coin_error": self.best_fixed_coin_error,
            "average_fixed_coin_error": self.average_fixed_coin_error,
            "coin_fixing_ok": self.coin_fixing_ok,
        }


class _Extraction:
    """Source table for coordinate ``j`` and the output party's completion step."""

    def __init__(self, q: DeterministicProtocol, f, mu: JointDistribution, k: int, C, j: int, cap: int):
        pts = _Points(q, f, mu, k, cap)
        w1, self.prob = _conditioned(pts, C)
        sel = w1 > 0
        w = w1[sel]
        rcols = [c[sel] for c in pts.r_columns(j, C)]
        if rcols:
            uniq, rinv = np.unique(np.stack(rcols), axis=1, return_inverse=True)
            rinv = rinv.ravel()
            r_symbols = tuple(tuple(int(v) for v in col) for col in uniq.T)
        else:
            rinv = np.zeros(w.size, dtype=np.int64)
            r_symbols = ((),)
        xa = f.x_alphabet.renamed("X")
        ya = f.y_alphabet.renamed("Y")
        ra = Alphabet("R", r_symbols)
        mas = tuple(a for a in q.message_alphabets)
        xj, yj = pts.x[j][sel], pts.y[j][sel]
        msgs = [m[sel] for m in pts.m]
        shape = (len(xa), len(ya), len(ra)) + tuple(len(a) for a in mas)
        _guard_cells(math.prod(shape), cap)
        arr = np.zeros(shape)
        np.add.at(arr, (xj, yj, rinv) + tuple(msgs), w)
        self.source = JointDistribution((xa, ya, ra) + mas, arr)
        self.target = JointDistribution((xa, ya), np.asarray(mu.probs, dtype=np.float64))
        self.cond_success = float(w1[pts.T[j]].sum())

        # completion: the output party samples its full input given (own_j, R_j, M)
        self.party = q.output_party
        own_j = yj if self.party == "B" else xj
        own_full = (pts.yf if self.party == "B" else pts.xf)[sel]
        own_size = len(q.y_alphabet if self.party == "B" else q.x_alphabet)
        own_base = len(ya if self.party == "B" else xa)
        cshape = (own_base, len(ra)) + tuple(len(a) for a in mas) + (own_size,)
        _guard_cells(math.prod(cshape), cap)
        comp = np.zeros(cshape)
        np.add.at(comp, (own_j, rinv) + tuple(msgs) + (own_full,), w)
        marg = np.zeros((own_base, own_size))
        np.add.at(marg, (own_j, own_full), w)
        den = comp.sum(axis=-1, keepdims=True)
        self.completion_defined = den[..., 0] > 0
        mden = marg.sum(axis=-1, keepdims=True)
        fallback = np.where(mden > 0, marg / np.where(mden > 0, mden, 1), 1.0 / own_size)
        fb = fallback.reshape((own_base,) + (1,) * (len(cshape) - 2) + (own_size,))
        self.completion = np.where(den > 0, comp / np.where(den > 0, den, 1), fb)
        self.cum = np.cumsum(self.completion, axis=-1)
        self.q, self.f, self.k, self.j = q, f, k, j

    def complete(self, own_j, r_own, msgs, seeds):
        """Output party's answer for coordinate ``j`` and a flag for fallback completions."""
        idx = (own_j, r_own) + tuple(msgs)
        cum = self.cum[idx]
        u = rnd.words(rnd.child_seeds(seeds, "complete"), 0, 1)[:, 0].astype(np.float64) / rnd.TWO64
        full = np.minimum((cum < u[:, None] * cum[:, -1:]).sum(axis=1), cum.shape[1] - 1)
        z = np.asarray(self.q.output_function(full, list(msgs)))
        zj = np.unravel_index(z, (len(self.f.z_alphabet),) * self.k)[self.j]
        return zj, ~self.completion_defined[idx]


def end_to_end_pipeline(p, f, mu: JointDistribution, k: int, params: CompressionParams, trials: int, seed: int,
                        C=(), j: int | None = None, coins: int = 16, sigma: float = 3.0,
                        cap: int = DEFAULT_CELL_CAP) -> PipelineResult:
    """Extract a single-coordinate protocol from a k-fold deterministic protocol and measure it.

    Steps: condition on ``T^(r) = 1`` for ``C``; choose ``j`` (least
    conditional success unless given); embed ``(X_j, Y_j) ~ mu`` into
    ``(X1_j R1_j, Y1_j R1_j)`` and simulate ``M1`` round by round; the output
    party then samples the rest of its k-fold input given its view and
    answers coordinate ``j`` as the k-fold protocol would. The composed
    error is at most ``1 - Pr[T_j = 1 | T^(r) = 1]`` plus the simulation's
    certified distance. Finally the shared randomness is fixed to each of
    ``coins`` seeds and the resulting deterministic protocol's error is
    computed exactly over ``mu``.
    """
    q = _deterministic(p)
    C = tuple(sorted(C))
    if j is None:
        table = success_table(q, f, mu, k, cap)
        rest = [i for i in range(k) if i not in C]
        vals = [conditional_success(table, C, i) for i in rest]
        j = rest[int(np.argmin([math.inf if math.isnan(v) else v for v in vals]))]
    ex = _Extraction(q, f, mu, k, C, j, cap)
    simulator = EmbeddedSimulator(ex.target, ex.source, params, x="X", y="Y", r="R",
                                  messages=[a.name for a in q.message_alphabets])

    def answer(xi, yi, seeds):
        xs, ys, ra, rb, run = simulator.run(xi, yi, seeds)
        own = ys if ex.party == "B" else xs
        r_own = rb if ex.party == "B" else ra
        zj, fallback = ex.complete(own, r_own, run.copy_of(ex.party), seeds)
        ok = f.accepts_idx(xs, ys, zj)
        return xs, ys, ra, rb, run, ok, fallback

    xi, yi = sample_cells(simulator.inputs, trials, rng_for(seed, "inputs"))
    seeds = rnd.trial_seeds(seed, trials)
    xs, ys, ra, rb, run, ok, fallback = answer(xi, yi, seeds)
    target = simulator.target()
    sim = empirical(target.axes, (xs, ys, ra, rb) + tuple(run.canonical))
    simulation = SimulationResult(
        simulated=sim,
        target=target,
        bits_sent=run.bits,
        l1_to_target=l1_distance(sim, target),
        certified_bound=simulator.certified,
        slack=l1_slack(math.prod(target.shape), trials, sigma),
        trials=trials,
        agreement=float(run.agreed.mean()),
        exhausted=int(run.exhausted.sum()),
        degenerate=int(run.degenerate.sum()),
        diagnostics=simulator.diagnostics(),
        round_agreed=run.round_agreed,
    )
    failures = int((~ok).sum())
    interval = wilson_interval(failures, trials, sigma)

    # fixed coins: every input pair under one shared seed
    inp = np.asarray(simulator.inputs.probs, dtype=np.float64)
    gx, gy = np.nonzero(inp > 0)
    wts = inp[gx, gy]
    fixed = []
    for c in rnd.trial_seeds(seed ^ 0x5EED, coins):
        s = np.full(gx.size, c, dtype=np.uint64)
        *_, ok_c, _ = answer(gx, gy, s)
        fixed.append(float(np.sum(wts[~ok_c])))
    return PipelineResult(
        coordinate=j,
        C=C,
        simulation=simulation,
        conditional_success=ex.cond_success,
        composed_error=failures / trials,
        composed_error_interval=interval,
        composed_error_bound=min(1.0, 1 - ex.cond_success + simulation.certified_bound),
        fixed_coin_errors=tuple(fixed),
        diagnostics={"success_probability": ex.prob, "completion_fallbacks": int(fallback.sum())},
    )


# -- result records --------------------------------------------------------------------


def inputs_hash(obj) -> str:
    """SHA-256 of the canonical JSON encoding of ``obj``."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    inputs_hash: str
    measured: dict
    certified: dict
    slack: dict
    runtime: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        obj = json.loads(text)
        return cls(**obj)

    @classmethod
    def timed(cls, experiment: str, inputs, fn):
        """Run ``fn() -> (measured, certified, slack)`` and record it with its runtime."""
        t0 = time.perf_counter()
        measured, certified, slack = fn()
        return cls(experiment, inputs_hash(inputs), measured, certified, slack, time.perf_counter() - t0)


__all__ = [
    "ExperimentConfig",
    "DecayTable",
    "CoordinateAnalysis",
    "PipelineResult",
    "ResultRecord",
    "success_table",
    "conditional_success",
    "prefix_success",
    "direct_product_decay",
    "analyze_coordinates",
    "end_to_end_pipeline",
    "inputs_hash",
]
