"""Command-line entry point.

Exit codes: 0 success, 1 a checked bound or invariant failed, 2 malformed
input or usage error. Table-producing subcommands write CSV (to ``--out`` or
stdout) and a one-line JSON summary to stderr; with ``--format json`` they
write a single JSON object holding both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from dpcomm import harness as H
from dpcomm import info
from dpcomm import problems as P
from dpcomm import protocols as Q
from dpcomm import randomness as rnd
from dpcomm.compression import CompressionParams, br_simulate, compress_round, simulate_multiround
from dpcomm.sampling import HypothesisViolation, correlated_sample_batch, disagreement_probability_exact
from dpcomm.stats import wilson_interval

SEED_ENV = "DPCOMM_SEED"


class InputError(Exception):
    pass


class BoundViolation(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _seed(value: str) -> int:
    v = int(value, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _group(value: str) -> tuple[str, ...]:
    return tuple(v for v in value.split(",") if v)


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


def _load_dist(path: str) -> info.JointDistribution:
    return info.from_json_dict(_read_json(path))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default) + "\n"


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _emit(args, header, rows, summary):
    if args.format == "json":
        text = json_text({"summary": summary, "rows": [dict(zip(header, r)) for r in rows]})
    else:
        text = csv_text(header, rows)
        sys.stderr.write(json_text(summary))
    _write(args, text)


def _emit_json(args, obj):
    _write(args, json_text(obj))


def _write(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands --------------------------------------------------------------------


def cmd_measure(args):
    d = _load_dist(args.dist)
    out = {}
    if args.entropy is not None:
        out["entropy"] = info.entropy(info.marginal(d, args.entropy) if args.entropy else d)
    if args.mi:
        out["mutual_information"] = info.mutual_information(d, args.mi[0], args.mi[1])
    if args.cmi:
        out["conditional_mutual_information"] = info.conditional_mutual_information(d, *args.cmi)
    for name, fn in (("kl", info.relative_entropy), ("dinf", info.relative_min_entropy), ("l1", info.l1_distance)):
        path = getattr(args, name)
        if path:
            out[name] = fn(d, _load_dist(path))
    if not out:
        out["entropy"] = info.entropy(d)
    out = {k: float(v) for k, v in out.items()}
    if args.format == "csv":
        _write(args, csv_text(["quantity", "value"], sorted(out.items())))
    else:
        _emit_json(args, out)


def _vector(d: info.JointDistribution) -> np.ndarray:
    return np.asarray(d.probs, dtype=np.float64).ravel()


def cmd_sample(args):
    p, q = _vector(_load_dist(args.p)), _vector(_load_dist(args.q))
    if p.size != q.size:
        raise InputError("P and Q must have the same number of cells")
    seeds = rnd.trial_seeds(args.seed, args.trials)
    a, b, agreed, exhausted = correlated_sample_batch(p, q, seeds, args.length)
    exact = disagreement_probability_exact(p, q)
    miss = int((~agreed).sum())
    lo, hi = wilson_interval(miss, args.trials, args.sigma)
    l1 = 0.5 * float(np.abs(p - q).sum())
    summary = {
        "trials": args.trials,
        "seed": args.seed,
        "measured_disagreement": miss / args.trials,
        "exact_disagreement": exact,
        "wilson_low": lo,
        "wilson_high": hi,
        "two_l1": 2 * l1,
        "exhausted": int(exhausted.sum()),
        "ok": bool(lo <= exact <= hi and exact <= 2 * l1 + 1e-12),
    }
    rows = [(i, int(a[i]), int(b[i]), bool(agreed[i]), bool(exhausted[i])) for i in range(args.trials)]
    _emit(args, ["trial", "a", "b", "agreed", "exhausted"], rows, summary)
    if not summary["ok"]:
        raise BoundViolation("measured disagreement inconsistent with the exact value")


def _params(args, rounds=None) -> CompressionParams:
    return CompressionParams(
        cutoff=args.cutoff if args.cutoff is not None else 0.0,
        delta=args.delta,
        eps_prime=args.eps_prime,
        budgets=args.budgets,
        leakages=args.leakages,
        rounds=rounds,
        length=args.length,
    )


def _simulation_output(args, res, extra=None):
    t = len(res.bits_sent)
    header = ["trial"] + [f"bits_{s}" for s in range(1, t + 1)] + [f"agreed_{s}" for s in range(1, t + 1)]
    flags = res.round_agreed
    rows = [[i] + list(res.bits_sent) + [bool(v) for v in flags[i]] for i in range(res.trials)]
    summary = res.summary()
    summary["diagnostics"] = {k: v for k, v in res.diagnostics.items() if not isinstance(v, dict)}
    if extra:
        summary.update(extra)
    _emit(args, header, rows, summary)
    if not res.ok:
        raise BoundViolation(
            f"measured l1 {res.l1_to_target:.6g} exceeds certified {res.certified_bound:.6g} + slack {res.slack:.6g}"
        )


def cmd_compress(args):
    d = _load_dist(args.dist)
    if args.cutoff is not None:
        res = br_simulate(d, _params(args), args.trials, args.seed, args.x, args.y, args.m, args.sigma)
    else:
        c = info.conditional_mutual_information(d, args.x, args.m, args.y) if args.budgets is None else args.budgets[0]
        e = info.conditional_mutual_information(d, args.y, args.m, args.x) if args.leakages is None else args.leakages[0]
        res = compress_round(d, c, e, args.eps_prime, args.trials, args.seed, args.x, args.y, args.m, args.sigma)
    _simulation_output(args, res)


def cmd_simulate(args):
    d = _load_dist(args.dist)
    res = simulate_multiround(d, _params(args), args.trials, args.seed, x=args.x, y=args.y,
                              r=args.r, messages=args.messages, sigma=args.sigma)
    _simulation_output(args, res)


def cmd_pointer(args):
    n, t = args.n, args.t
    proto = P.naive_protocol(n, t, bit=args.bit)
    rel = P.PointerChasingRelation(n, t, bit=args.bit)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    rows = []
    wrong = 0
    for i in range(args.instances):
        inst = P.PointerChasingInstance.random(n, t, rng)
        transcript, z = Q.run(proto, inst.x_code, inst.y_code)
        want = P.bp_eval(inst) if args.bit else P.fp_eval(inst)
        wrong += z != want
        rows.append((i, json.dumps(list(inst.fa)), json.dumps(list(inst.fb)), P.fp_eval(inst), P.bp_eval(inst),
                     z, json.dumps(list(transcript)), z == want))
    summary = {"n": n, "t": t, "bit": args.bit, "cost": Q.communication_cost(proto),
               "naive_bound": t * math.ceil(math.log2(n)), "instances": args.instances, "wrong": int(wrong)}
    if args.exhaustive:
        summary["exhaustive_error"] = Q.distributional_error(proto, rel, P.pointer_inputs(n))
    _emit(args, ["instance", "fa", "fb", "fp", "bp", "output", "transcript", "correct"], rows, summary)
    if wrong or summary.get("exhaustive_error", 0.0) > 0:
        raise BoundViolation("naive protocol answered incorrectly")


def _k_fold_setup(args):
    if args.example == "noisy-equality":
        f = P.equality_relation()
        base = P.noisy_equality_protocol(args.flip)
        mu = info.JointDistribution.uniform((f.x_alphabet, f.y_alphabet))
    else:
        if not (args.base and args.relation and args.mu):
            raise InputError("give --example or all of --base, --relation and --mu")
        base = Q.protocol_from_json_dict(_read_json(args.base))
        f = Q.relation_from_json_dict(_read_json(args.relation))
        mu = _load_dist(args.mu)
    return f, base, mu


def cmd_direct_product(args):
    f, base, mu = _k_fold_setup(args)
    k = args.k
    p_base = 1.0 - Q.distributional_error(base, f, mu)
    rep = P.independent_repetition(base, k)
    decay = H.direct_product_decay(rep, f, mu, k)
    rows, worst = [], 0.0
    for row in decay.rows():
        pred = p_base ** row["r"]
        worst = max(worst, abs(row["prefix_success"] - pred))
        rows.append((row["r"], row["prefix_success"], pred, row["next_coordinate"], row["conditional_success"],
                     row["marginal_success"]))
    summary = {"k": k, "base_success": p_base, "order": list(decay.order), "max_deviation": worst,
               "tolerance": args.tolerance}
    _emit(args, ["r", "prefix_success", "base_success_power", "next_coordinate", "conditional_success",
                 "marginal_success"], rows, summary)
    if worst > args.tolerance:
        raise BoundViolation(f"independent repetition deviates from p^r by {worst:.3g}")


def cmd_analyze(args):
    f, base, mu = _k_fold_setup(args)
    if isinstance(base, Q.PublicCoinProtocol):
        if len(base.branches) != 1 and args.coin is None:
            raise InputError("analysis needs a deterministic protocol: pass --coin to fix the public coin")
        base = base.branches[0] if args.coin is None else base.branches[args.coin]
    rep = P.independent_repetition(base, args.k)
    res = H.analyze_coordinates(rep, f, mu, args.k, C=args.C, delta=args.delta, delta1=args.delta1, c=args.c,
                                eps=args.eps, kappa=args.kappa)
    header = ["coordinate", "conditional_success", *H.QUANTITIES, "satisfied"]
    rows = [[r[h] for h in header] for r in res.rows()]
    summary = {"C": list(res.C), "success_probability": res.success_probability, "thresholds": res.thresholds,
               "sanity": res.sanity, "params": res.params}
    _emit(args, header, rows, summary)
    if not res.sanity_ok:
        raise BoundViolation("a per-coordinate sum exceeds its global bound")


def cmd_validate(args):
    p = Q.protocol_from_json_dict(_read_json(args.protocol))
    out = {"cost": Q.communication_cost(p)}
    mu = _load_dist(args.mu) if args.mu else None
    if args.relation and mu is not None:
        f = Q.relation_from_json_dict(_read_json(args.relation))
        direct = Q.distributional_error(p, f, mu)
        via = Q.distributional_error_via_transcript(p, f, mu)
        out.update(error=direct, error_via_transcript=via)
        if abs(direct - via) > 1e-12:
            _emit_json(args, out)
            raise BoundViolation("error computations disagree")
    if mu is not None:
        branches = p.branches if isinstance(p, Q.PublicCoinProtocol) else (p,)
        x, y = branches[0].x_alphabet.name, branches[0].y_alphabet.name
        dep = info.mutual_information(mu, x, y)
        # per round, worst case over public coins
        profile = np.max([Q.conditional_dependence_profile(b, mu) for b in branches], axis=0).tolist()
        out.update(input_dependence=dep, conditional_dependence=profile, product_inputs=dep <= args.tolerance)
        if dep <= args.tolerance and max(profile) > args.tolerance:
            _emit_json(args, out)
            raise BoundViolation("transcript correlates product inputs")
    _emit_json(args, out)


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help=f"64-bit seed (default ${SEED_ENV} or 0)")
    common.add_argument("--trials", type=_positive_int, default=10_000)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--out", default=None, help="write the main output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--sigma", type=float, default=3.0, help="confidence level in standard deviations")

    parser = argparse.ArgumentParser(prog="dpcomm", description="Exact and Monte Carlo experiments on two-party protocols.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    m = sub.add_parser("measure", parents=[common], help="information quantities of a distribution file")
    m.add_argument("dist")
    m.add_argument("--entropy", type=_group, nargs="?", const=(), default=None, metavar="AXES")
    m.add_argument("--mi", type=_group, nargs=2, metavar=("A", "B"))
    m.add_argument("--cmi", type=_group, nargs=3, metavar=("A", "B", "C"))
    m.add_argument("--kl", metavar="FILE")
    m.add_argument("--dinf", metavar="FILE")
    m.add_argument("--l1", metavar="FILE")
    m.set_defaults(func=cmd_measure, default_format="json")

    s = sub.add_parser("sample", parents=[common], help="correlated sampling between two distributions")
    s.add_argument("p")
    s.add_argument("q")
    s.add_argument("--length", type=_positive_int, default=None)
    s.set_defaults(func=cmd_sample, default_format="csv")

    def compression_flags(sp):
        sp.add_argument("dist")
        sp.add_argument("--x", type=_group, default=("X",))
        sp.add_argument("--y", type=_group, default=("Y",))
        sp.add_argument("--cutoff", type=float, default=None)
        sp.add_argument("--delta", type=float, default=0.05)
        sp.add_argument("--eps-prime", dest="eps_prime", type=float, default=0.05)
        sp.add_argument("--budgets", type=lambda v: tuple(float(x) for x in v.split(",")), default=None)
        sp.add_argument("--leakages", type=lambda v: tuple(float(x) for x in v.split(",")), default=None)
        sp.add_argument("--length", type=_positive_int, default=None)

    c = sub.add_parser("compress", parents=[common], help="one-message compression of a table over X, Y, M")
    compression_flags(c)
    c.add_argument("--m", type=_group, default=("M",))
    c.set_defaults(func=cmd_compress, default_format="csv")

    sm = sub.add_parser("simulate", parents=[common], help="round-by-round simulation of a transcript table")
    compression_flags(sm)
    sm.add_argument("--r", type=_group, default=None)
    sm.add_argument("--messages", type=_group, default=None)
    sm.set_defaults(func=cmd_simulate, default_format="csv")

    pt = sub.add_parser("pointer", parents=[common], help="pointer chasing with the naive protocol")
    pt.add_argument("--n", type=_positive_int, required=True)
    pt.add_argument("--t", type=_positive_int, required=True)
    pt.add_argument("--instances", type=int, default=10)
    pt.add_argument("--bit", action="store_true", help="bit version (least significant bit of the 0-based pointer)")
    pt.add_argument("--exhaustive", action="store_true", help="exact error over all function pairs (n <= 5)")
    pt.set_defaults(func=cmd_pointer, default_format="csv")

    def kfold_flags(sp):
        sp.add_argument("--k", type=_positive_int, required=True)
        sp.add_argument("--example", choices=("noisy-equality",), default=None)
        sp.add_argument("--flip", type=float, default=0.1)
        sp.add_argument("--base", help="base protocol JSON")
        sp.add_argument("--relation", help="base relation JSON")
        sp.add_argument("--mu", help="input distribution JSON over (X, Y)")

    dp = sub.add_parser("direct-product", parents=[common], help="success decay of independent repetition")
    kfold_flags(dp)
    dp.set_defaults(func=cmd_direct_product, default_format="csv")

    an = sub.add_parser("analyze", parents=[common], help="per-coordinate quantities given success on C")
    kfold_flags(an)
    an.add_argument("--C", type=lambda v: tuple(int(x) for x in v.split(",") if x), default=())
    an.add_argument("--coin", type=int, default=None)
    an.add_argument("--eps", type=float, default=0.1)
    an.add_argument("--delta", type=float, default=None)
    an.add_argument("--delta1", type=float, default=None)
    an.add_argument("--c", type=float, default=None)
    an.add_argument("--kappa", type=float, default=None, help="free constant; only reported")
    an.set_defaults(func=cmd_analyze, default_format="csv")

    v = sub.add_parser("validate", parents=[common], help="cost, error and independence checks for a protocol")
    v.add_argument("protocol")
    v.add_argument("--relation")
    v.add_argument("--mu")
    v.set_defaults(func=cmd_validate, default_format="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = args.default_format
    try:
        if args.seed is None:
            args.seed = _default_seed()
        args.func(args)
    except BoundViolation as exc:
        print(f"dpcomm: bound violated: {exc}", file=sys.stderr)
        return 1
    except (InputError, info.DistributionError, Q.ProtocolError, HypothesisViolation, ValueError, KeyError) as exc:
        print(f"dpcomm: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
