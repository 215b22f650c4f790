import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import markov_xym, random_table, transcript_table
from dpcomm import randomness as rnd
from dpcomm.compression import (
    KAPPA_IMPL,
    CompressionParams,
    EmbeddedSimulator,
    PreconditionError,
    br_compress,
    br_compress_batch,
    br_simulate,
    collision_bound,
    compress_round,
    embed_and_simulate,
    hash_length,
    log_ratio_exceedance,
    simulate_multiround,
    three_set_exceedance,
)
from dpcomm.hashing import PRIME, PairwiseHash
from dpcomm.info import (
    Alphabet,
    JointDistribution,
    conditional_kernel,
    conditional_mutual_information,
    marginal,
    mixture,
    tensor,
)
from dpcomm.stats import wilson_interval


def reference_br(nx, ny, seed, cutoff, delta, length):
    """Scalar one-shot compression following the protocol description literally."""
    u = len(nx)
    ws = [int(w) for w in rnd.words([seed], 0, 2 * length)[0]]
    entries = [(ws[2 * j] % u, ws[2 * j + 1] / 2.0**64) for j in range(length)]
    hw = [int(w) for w in rnd.words(rnd.child_seeds([seed], "hash"), 0, 2)[0]]
    a_coef, b_coef = 1 + hw[0] % (PRIME - 1), hw[1] % PRIME
    k = hash_length(cutoff, delta, u)

    def h(j):
        return ((a_coef * j + b_coef) % PRIME) & ((1 << k) - 1)

    ia = next((j for j, (s, lv) in enumerate(entries) if lv < nx[s]), None)
    if ia is None:
        return None
    for j, (s, lv) in enumerate(entries):
        if lv < min(1.0, ny[s] * 2.0**cutoff) and h(j) == h(ia):
            return entries[ia][0], s
    return entries[ia][0], None


vectors = st.integers(2, 5).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 9), min_size=n, max_size=n).filter(lambda w: sum(w) > 0),
        st.lists(st.integers(1, 9), min_size=n, max_size=n),
    )
).map(lambda t: tuple(np.asarray(w, float) / sum(w) for w in t))


class TestHash:
    def test_range_and_determinism(self):
        seeds = rnd.trial_seeds(1, 100)
        h = PairwiseHash(seeds, 6)
        out = h(np.arange(100))
        assert out.min() >= 0 and out.max() < 64
        np.testing.assert_array_equal(out, PairwiseHash(seeds, 6)(np.arange(100)))

    def test_collision_rate(self):
        n, bits = 200_000, 4
        h = PairwiseHash(rnd.trial_seeds(3, n), bits)
        coll = int((h(np.full(n, 17)) == h(np.full(n, 1_000_003))).sum())
        lo, _ = wilson_interval(coll, n)
        assert lo <= 2.0**-bits

    def test_bits_validated(self):
        with pytest.raises(ValueError):
            PairwiseHash([1], 31)

    @given(st.floats(0, 40), st.floats(1e-4, 0.99), st.integers(1, 64))
    def test_hash_length_keeps_collisions_small(self, c, delta, u):
        k = hash_length(c, delta, u)
        if k < 30:
            assert collision_bound(c, k, u) <= delta / 4 + 1e-15


class TestBitBudget:
    @given(st.floats(0, 50), st.floats(0, 0.99), st.floats(1e-4, 0.5), st.integers(1, 4096))
    def test_round_cost_within_budget(self, c, eps, eps_prime, u):
        cutoff = (c + 5) / eps_prime
        delta = min(0.5, 3 * eps_prime + math.sqrt(eps))
        assert hash_length(cutoff, delta, u) <= cutoff + KAPPA_IMPL * math.log2(1 / eps_prime)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            CompressionParams(eps_prime=0.6)
        with pytest.raises(ValueError):
            CompressionParams(delta=0)
        with pytest.raises(ValueError):
            CompressionParams(budgets=(1.0,), rounds=2)
        with pytest.raises(ValueError):
            CompressionParams(cutoff=-1)


class TestOneShot:
    @given(vectors, st.floats(0, 4), st.integers(0, 2**64 - 1))
    @settings(max_examples=100, deadline=None)
    def test_batch_matches_reference(self, nxy, cutoff, seed):
        nx, ny = nxy
        length = 200
        res = br_compress_batch(nx, ny, [seed], cutoff, 0.1, length)
        ref = reference_br(nx, ny, seed, cutoff, 0.1, length)
        if ref is None:
            assert res.alice_exhausted[0]
            return
        assert res.alice[0] == ref[0]
        if ref[1] is None:
            assert res.bob_exhausted[0]
        else:
            assert res.bob[0] == ref[1]

    def test_independent_message(self, rng):
        n = rng.dirichlet(np.ones(4))
        res = br_compress_batch(n, n, rnd.trial_seeds(4, 50_000), 0.0, 0.05)
        assert 1 - res.agreed.mean() <= res.collision_bound + 0.01
        assert res.collision_bound <= 0.05 / 4

    def test_point_mass_sender(self):
        # N(.|x) a point mass, N(.|y) uniform on two symbols: ratio <= 2, c = 1
        n = 100_000
        seeds = rnd.trial_seeds(6, n)
        for sym in (0, 1):
            nx = np.eye(2)[sym]
            res = br_compress_batch(nx, [0.5, 0.5], seeds, 1.0, 0.01)
            assert (res.alice == sym).all()
            lo, _ = wilson_interval(int((~res.agreed).sum()), n)
            assert lo <= res.collision_bound

    def test_stream_wrapper(self):
        d = markov_xym(np.random.default_rng(0), 2, 2, 3)
        kx, ky = conditional_kernel(d, "X", "M"), conditional_kernel(d, "Y", "M")
        a, b, bits = br_compress(kx, ky, 0, 1, CompressionParams(cutoff=3), rnd.RandomnessStream(5, 3))
        assert a in (0, 1, 2) and bits == hash_length(3, 0.05, 3)

    def test_random_instance_quantile_cutoff(self, rng):
        d = markov_xym(rng, 3, 3, 3)
        p = d.probs
        nx = p.sum(axis=1) / p.sum(axis=(1, 2))[:, None]
        ny = p.sum(axis=0) / p.sum(axis=(0, 2))[:, None]
        lr = np.log2(nx[:, None, :] / ny[None, :, :])
        order = np.argsort(lr.ravel())
        cum = np.cumsum(p.ravel()[order])
        c = max(0.0, float(lr.ravel()[order][np.searchsorted(cum, 0.95)]))
        assert log_ratio_exceedance(d, c) <= 0.05
        res = br_simulate(d, CompressionParams(cutoff=c, delta=0.05), 100_000, seed=12)
        assert res.l1_to_target <= 0.1 + res.slack

    def test_preconditions(self, rng):
        d = markov_xym(rng, 3, 3, 3)
        with pytest.raises(PreconditionError) as exc:
            br_simulate(d, CompressionParams(cutoff=0.0, delta=0.01), 10, seed=0)
        assert exc.value.values["exceedance"] > 0.01
        leaky = random_table(rng, (3, 3, 3), ["X", "Y", "M"])
        with pytest.raises(PreconditionError):
            br_simulate(leaky, CompressionParams(cutoff=50), 10, seed=0)

    def test_exceedance_by_loops(self, rng):
        d = markov_xym(rng, 2, 3, 3)
        p = d.probs
        total = 0.0
        for i, j, k in np.ndindex(p.shape):
            nx = p[i, :, k].sum() / p[i].sum()
            ny = p[:, j, k].sum() / p[:, j].sum()
            if p[i, j, k] > 0 and math.log2(nx / ny) > 0.5:
                total += p[i, j, k]
        assert log_ratio_exceedance(d, 0.5) == pytest.approx(total, abs=1e-15)


class TestCompressRound:
    def test_independent_message(self, rng):
        xy = random_table(rng, (2, 3), ["X", "Y"])
        d = tensor(xy, random_table(rng, (3,), ["M"]))
        res = compress_round(d, 0.0, 0.0, 0.05, 50_000, seed=1)
        assert res.ok and res.diagnostics["budgets"] == [0.0]

    def test_copy_of_uniform_bit(self):
        d = JointDistribution.from_array(np.einsum("x,y,xm->xym", [0.5, 0.5], [0.5, 0.5], np.eye(2)), ["X", "Y", "M"])
        assert conditional_mutual_information(d, "X", "M", "Y") == pytest.approx(1.0)
        assert conditional_mutual_information(d, "Y", "M", "X") == pytest.approx(0.0, abs=1e-12)
        res = compress_round(d, 1.0, 0.0, 0.05, 100_000, seed=2)
        assert res.l1_to_target <= 6 * 0.05 + res.slack
        assert len(res.bits_sent) == 1

    def test_small_leakage(self, rng):
        base = markov_xym(rng, 2, 2, 2)
        d = mixture([0.97, 0.03], [base, random_table(rng, (2, 2, 2), ["X", "Y", "M"])])
        eps = conditional_mutual_information(d, "Y", "M", "X")
        assert eps <= 0.01
        c = conditional_mutual_information(d, "X", "M", "Y")
        res = compress_round(d, c, 0.01, 0.05, 100_000, seed=3)
        assert res.certified_bound == pytest.approx(3 * 0.1 + 0.3, abs=1e-9)
        assert res.l1_to_target <= 0.6 + res.slack

    def test_budget_checked(self, rng):
        d = random_table(rng, (2, 2, 2), ["X", "Y", "M"])
        with pytest.raises(PreconditionError):
            compress_round(d, 0.0, 0.5, 0.05, 10, seed=0)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5))
    @settings(max_examples=40, deadline=None)
    def test_three_sets(self, seed, eps_prime):
        rng = np.random.default_rng(seed)
        shape = tuple(rng.integers(1, 4, size=3))
        d = random_table(rng, shape, ["X", "Y", "M"], sparsity=0.3)
        c = conditional_mutual_information(d, "X", "M", "Y")
        eps = conditional_mutual_information(d, "Y", "M", "X")
        g = three_set_exceedance(d, c, eps, eps_prime)
        for key in ("g1", "g2", "g3"):
            assert g[key] <= eps_prime + 1e-12
        assert g["exceed_under_m"] <= g["g1"] + g["g2"] + g["g3"] + 1e-12
        assert g["exceed_under_m"] <= 3 * eps_prime + 1e-12
        assert g["exceed_under_n"] <= 3 * eps_prime + math.sqrt(eps) + 1e-12


class TestMultiround:
    def test_single_round_matches_compress_round(self, rng):
        d = transcript_table(rng, 1)
        d = JointDistribution.from_array(d.probs, ["X", "Y", "M"])
        c = conditional_mutual_information(d, "X", "M", "Y")
        a = compress_round(d, c, 0.0, 0.05, 20_000, seed=4)
        b = simulate_multiround(d, CompressionParams(eps_prime=0.05), 20_000, seed=4)
        np.testing.assert_array_equal(a.simulated.probs, b.simulated.probs)

    def test_echo_round_is_free(self, rng):
        pxy = rng.dirichlet(np.ones(4)).reshape(2, 2)
        p = np.einsum("xy,xa,ab->xyab", pxy, np.eye(2), np.eye(2))
        d = JointDistribution.from_array(p, ["X", "Y", "M1", "M2"])
        res = simulate_multiround(d, CompressionParams(), 50_000, seed=5)
        assert res.diagnostics["budgets"][1] == pytest.approx(0, abs=1e-12)
        assert res.diagnostics["leakages"][1] == pytest.approx(0, abs=1e-12)
        assert res.round_agreed[:, 1].mean() >= 1 - collision_bound(100, res.bits_sent[1], 2) - 0.01
        assert res.ok

    @pytest.mark.parametrize("t", [2, 3])
    def test_random_transcript(self, rng, t):
        d = transcript_table(rng, t)
        res = simulate_multiround(d, CompressionParams(eps_prime=0.05), 100_000, seed=t)
        leak = res.diagnostics["leakages"]
        assert res.certified_bound == pytest.approx(sum(3 * math.sqrt(e) for e in leak) + 6 * 0.05 * t, abs=1e-9)
        assert res.l1_to_target <= res.certified_bound + res.slack
        assert res.exhausted == 0

    def test_prefix_preserved(self, rng):
        # later rounds never change earlier simulated messages
        d = transcript_table(rng, 3)
        full = simulate_multiround(d, CompressionParams(), 30_000, seed=9)
        short = simulate_multiround(marginal(d, ["X", "Y", "M1", "M2"]), CompressionParams(), 30_000, seed=9)
        n = 30_000
        np.testing.assert_array_equal(np.rint(full.simulated.probs.sum(axis=-1) * n),
                                      np.rint(short.simulated.probs * n))

    def test_supplied_budget_checked(self, rng):
        d = transcript_table(rng, 2)
        with pytest.raises(PreconditionError):
            simulate_multiround(d, CompressionParams(budgets=(0.0, 0.0), rounds=2), 10, seed=0)

    def test_degenerate_rows_are_flagged(self):
        # round-2 rows for an unreachable prefix fall back to uniform; the count is reported
        p = np.zeros((2, 2, 2, 2))
        p[0, :, 0, :] = 0.125
        p[1, :, 1, :] = 0.125
        d = JointDistribution.from_array(p, ["X", "Y", "M1", "M2"])
        res = simulate_multiround(d, CompressionParams(), 20_000, seed=1)
        assert res.degenerate <= 20_000 * (1 - res.agreement) + 1
        assert res.ok


class TestEmbedded:
    def test_constant_r(self, rng):
        d = transcript_table(rng, 2)
        src = JointDistribution(d.axes + (Alphabet("R", (0,)),), d.probs[..., None])
        res = embed_and_simulate(marginal(d, ["X", "Y"]), src, CompressionParams(), 50_000, seed=2)
        # tau = 5 sqrt(eps) turns float rounding in eps (~1e-16) into ~1e-7
        assert res.diagnostics["tau"] == pytest.approx(0, abs=1e-6)
        plain = simulate_multiround(d, CompressionParams(), 50_000, seed=2)
        assert res.certified_bound == pytest.approx(plain.certified_bound, abs=1e-6)
        assert res.ok

    def test_shared_copy(self):
        p = np.zeros((2, 2, 2, 2))
        for b in (0, 1):
            p[b, b, b, b] = 0.5
        src = JointDistribution.from_array(p, ["X", "Y", "R", "M1"])
        tgt = marginal(src, ["X", "Y"])
        sim = EmbeddedSimulator(tgt, src, CompressionParams())
        assert sim.embedding.certified_error == pytest.approx(0, abs=1e-12)
        xs, ys, ra, rb, run = sim.run(np.array([0, 1] * 50), np.array([0, 1] * 50), rnd.trial_seeds(0, 100))
        np.testing.assert_array_equal(ra, rb)
        np.testing.assert_array_equal(ra, xs)

    def test_close_source(self, rng):
        d = transcript_table(rng, 2)
        r = rng.dirichlet(np.ones(2))
        src = JointDistribution(d.axes + (Alphabet("R", (0, 1)),), d.probs[..., None] * r)
        src = mixture([0.98, 0.02], [src, random_table(rng, src.shape, src.names)])
        tgt = marginal(d, ["X", "Y"])
        res = embed_and_simulate(tgt, src, CompressionParams(), 100_000, seed=3)
        assert res.certified_bound == pytest.approx(res.diagnostics["tau"] + sum(
            3 * math.sqrt(e) + 6 * 0.05 for e in res.diagnostics["leakages"]) + res.diagnostics["truncation"])
        assert res.ok
