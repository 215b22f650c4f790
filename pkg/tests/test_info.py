import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from scipy.stats import entropy as scipy_entropy

from conftest import random_table, tables
from dpcomm import info
from dpcomm.exact import LogSum
from dpcomm.info import (
    Alphabet,
    ConditionalKernel,
    ConditioningError,
    DistributionError,
    JointDistribution,
    condition,
    conditional_entropy,
    conditional_kernel,
    conditional_mutual_information,
    entropy,
    l1_distance,
    marginal,
    markov_extend,
    markov_projection,
    mixture,
    mutual_information,
    relative_entropy,
    relative_min_entropy,
    tensor,
)

BITS = [Alphabet("X", (0, 1)), Alphabet("Y", (0, 1))]
SKEW = JointDistribution.from_array([[0.4, 0.1], [0.1, 0.4]], ["X", "Y"])


def vec(p, name="A"):
    return JointDistribution.from_array(np.asarray(p, dtype=float), [name])


class TestConstruction:
    def test_rejects_bad_tables(self):
        with pytest.raises(DistributionError):
            vec([0.5, 0.6])
        with pytest.raises(DistributionError):
            vec([1.5, -0.5])
        with pytest.raises(DistributionError):
            JointDistribution.from_array(np.full((2, 2), 0.25), ["X", "X"])
        with pytest.raises(DistributionError):
            Alphabet("A", (0, 0))

    def test_tables_are_read_only(self):
        with pytest.raises(ValueError):
            SKEW.probs[0, 0] = 1.0

    def test_prob_lookup_by_symbol(self):
        d = JointDistribution.from_array([[0.1, 0.2], [0.3, 0.4]], ["X", "Y"], [("a", "b"), ("c", "d")])
        assert d.prob({"X": "b", "Y": "c"}) == pytest.approx(0.3)


class TestMarginalConditionTensor:
    def test_uniform_marginal(self):
        m = marginal(JointDistribution.uniform(BITS), "X")
        np.testing.assert_allclose(m.probs, [0.5, 0.5])

    def test_point_mass_marginal(self):
        d = JointDistribution.point_mass(BITS, (1, 0))
        np.testing.assert_array_equal(marginal(d, "Y").probs, [1.0, 0.0])

    def test_row_sums(self):
        np.testing.assert_allclose(marginal(SKEW, "X").probs, [0.5, 0.5])

    def test_condition_on_product_gives_factor(self, rng):
        p, q = random_table(rng, (3,), ["P"]), random_table(rng, (4,), ["Q"])
        d = tensor(p, q)
        for v in range(3):
            np.testing.assert_allclose(condition(d, "P", v).probs, q.probs, atol=1e-15)

    def test_condition_correlated_bits(self):
        d = JointDistribution.from_array([[0.5, 0.0], [0.0, 0.5]], ["X", "Y"])
        np.testing.assert_array_equal(condition(d, "X", 0).probs, [1.0, 0.0])

    def test_condition_slice(self):
        np.testing.assert_allclose(condition(SKEW, "X", 0).probs, [0.8, 0.2])

    def test_condition_on_null_event(self):
        d = JointDistribution.from_array([[0.5, 0.0], [0.5, 0.0]], ["X", "Y"])
        with pytest.raises(ConditioningError):
            condition(d, "Y", 1)

    def test_tensor_with_point_mass(self):
        mu = vec([0.2, 0.8], "X")
        d = tensor(mu, JointDistribution.point_mass([Alphabet("C", ("c",))], ("c",)))
        np.testing.assert_array_equal(d.probs[:, 0], mu.probs)

    def test_tensor_uniforms(self):
        d = tensor(vec([0.5, 0.5], "A"), vec([0.5, 0.5], "B"))
        np.testing.assert_allclose(d.probs.ravel(), [0.25] * 4)

    def test_tensor_elementwise(self):
        d = tensor(vec([0.75, 0.25], "A"), vec([0.5, 0.5], "B"))
        np.testing.assert_allclose(d.probs.ravel(), [0.375, 0.375, 0.125, 0.125])

    def test_tensor_name_clash(self):
        with pytest.raises(DistributionError):
            tensor(vec([1.0]), vec([1.0]))


class TestMarkovExtend:
    def test_copy_kernel(self):
        d = markov_extend(SKEW, ConditionalKernel.copy_of(SKEW.alphabet("Y"), "C"))
        assert np.all(d.probs[:, 0, 1] == 0) and np.all(d.probs[:, 1, 0] == 0)
        assert conditional_mutual_information(d, "X", "C", "Y") == pytest.approx(0, abs=1e-12)

    def test_independent_kernel(self):
        k = ConditionalKernel.from_rows([SKEW.alphabet("Y")], [Alphabet("C", (0, 1, 2))], [[0.2, 0.3, 0.5]] * 2)
        d = markov_extend(SKEW, k)
        assert mutual_information(d, "C", ["X", "Y"]) == pytest.approx(0, abs=1e-12)

    def test_noisy_copy(self):
        k = ConditionalKernel.from_rows([SKEW.alphabet("Y")], [Alphabet("C", (0, 1))], [[0.9, 0.1], [0.1, 0.9]])
        d = markov_extend(SKEW, k)
        assert d.probs[0, 0, 0] == pytest.approx(0.4 * 0.9)
        assert conditional_mutual_information(d, "X", "C", "Y") == pytest.approx(0, abs=1e-12)

    def test_kernel_rows_must_normalize(self):
        with pytest.raises(DistributionError):
            ConditionalKernel.from_rows([SKEW.alphabet("Y")], [Alphabet("C", (0, 1))], [[0.9, 0.2], [0.5, 0.5]])

    def test_undefined_row_on_support(self):
        k = conditional_kernel(JointDistribution.from_array([[1.0, 0.0], [0.0, 0.0]], ["Y", "C"]), "Y", "C")
        assert not k.defined[1]
        with pytest.raises(ConditioningError):
            markov_extend(SKEW, k)


class TestMeasureVectors:
    def test_l1(self):
        assert l1_distance(vec([0.3, 0.7]), vec([0.3, 0.7])) == 0
        assert l1_distance(vec([1.0, 0.0]), vec([0.0, 1.0])) == 1
        assert l1_distance(vec([0.75, 0.25]), vec([0.5, 0.5])) == pytest.approx(0.25)

    def test_entropy(self):
        assert entropy(vec([1.0, 0.0])) == 0
        assert entropy(vec(np.full(8, 1 / 8))) == pytest.approx(3.0, abs=1e-12)
        oracle = -(mpmath.mpf(3) / 4 * mpmath.log(0.75, 2) + mpmath.mpf(1) / 4 * mpmath.log(0.25, 2))
        assert entropy(vec([0.75, 0.25])) == pytest.approx(float(oracle), abs=1e-12)
        assert float(oracle) == pytest.approx(0.811278, abs=1e-6)

    def test_relative_entropy(self):
        assert relative_entropy(SKEW, SKEW) == 0
        assert relative_entropy(vec([1.0, 0.0]), vec([0.5, 0.5])) == pytest.approx(1.0)
        assert relative_entropy(vec([0.75, 0.25]), vec([0.5, 0.5])) == pytest.approx(0.188722, abs=1e-6)
        assert relative_entropy(vec([0.5, 0.5]), vec([1.0, 0.0])) == math.inf

    def test_relative_min_entropy(self):
        assert relative_min_entropy(SKEW, SKEW) == 0
        assert relative_min_entropy(vec([0.75, 0.25]), vec([0.5, 0.5])) == pytest.approx(math.log2(1.5))
        assert relative_min_entropy(vec([0.5, 0.5]), vec([1.0, 0.0])) == math.inf

    def test_mutual_information(self, rng):
        prod = tensor(random_table(rng, (3,), ["X"]), random_table(rng, (4,), ["Y"]))
        assert mutual_information(prod, "X", "Y") == pytest.approx(0, abs=1e-12)
        same = JointDistribution.from_array([[0.5, 0.0], [0.0, 0.5]], ["X", "Y"])
        assert mutual_information(same, "X", "Y") == pytest.approx(1.0)
        p = SKEW.probs
        oracle = sum(p[i, j] * math.log2(p[i, j] / 0.25) for i in range(2) for j in range(2))
        assert mutual_information(SKEW, "X", "Y") == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.278072, abs=1e-6)

    def test_cmi_constant_condition(self, rng):
        d = random_table(rng, (3, 2, 1), ["A", "B", "C"])
        assert conditional_mutual_information(d, "A", "B", "C") == pytest.approx(mutual_information(d, "A", "B"))

    def test_cmi_equals_kl_to_markov_projection(self, rng):
        # Markov table perturbed toward an independent one; both sides computed separately
        base = markov_projection(random_table(rng, (2, 3, 2), ["A", "B", "C"]), "A", "B", "C")
        d = mixture([0.9, 0.1], [base, random_table(rng, (2, 3, 2), ["A", "B", "C"])])
        p = d.probs
        pbc = p.sum(axis=0, keepdims=True)
        pb = p.sum(axis=(0, 2), keepdims=True)
        proj = p.sum(axis=2, keepdims=True) * pbc / pb
        oracle = float(np.sum(p * np.log2(p / proj)))
        assert conditional_mutual_information(d, "A", "C", "B") == pytest.approx(oracle, abs=1e-9)
        assert relative_entropy(d, markov_projection(d, "A", "B", "C")) == pytest.approx(oracle, abs=1e-9)

    def test_overlapping_groups_rejected(self):
        with pytest.raises(DistributionError):
            mutual_information(SKEW, "X", ["X", "Y"])


class TestAgainstScipy:
    @given(tables(names=("A", "B")))
    @settings(max_examples=60, deadline=None)
    def test_entropy_and_kl(self, d):
        p = d.probs.ravel()
        assert entropy(d) == pytest.approx(scipy_entropy(p, base=2), abs=1e-12)
        q = np.full_like(p, 1 / p.size)
        u = JointDistribution(d.axes, q.reshape(d.shape))
        assert relative_entropy(d, u) == pytest.approx(scipy_entropy(p, q, base=2), abs=1e-12)


class TestIdentities:
    @given(tables(names=("A", "B", "C")))
    @settings(max_examples=80, deadline=None)
    def test_chain_rule_and_bounds(self, d):
        h_abc = entropy(d)
        assert h_abc == pytest.approx(entropy(marginal(d, "A")) + conditional_entropy(d, ["B", "C"], "A"), abs=1e-9)
        i_a_bc = mutual_information(d, "A", ["B", "C"])
        split = mutual_information(d, "A", "B") + conditional_mutual_information(d, "A", "C", "B")
        assert i_a_bc == pytest.approx(split, abs=1e-9)
        assert conditional_mutual_information(d, "A", "B", "C") >= 0
        assert i_a_bc <= min(entropy(marginal(d, "A")), entropy(marginal(d, ["B", "C"]))) + 1e-9

    @given(tables(names=("A", "B")), tables(names=("A", "B"), zeros=False))
    @settings(max_examples=60, deadline=None)
    def test_pinsker_and_min_entropy(self, p, q):
        if p.shape != q.shape:
            return
        q = JointDistribution(p.axes, q.probs)
        kl = relative_entropy(p, q)
        assert l1_distance(p, q) <= math.sqrt(kl) + 1e-9
        assert kl <= relative_min_entropy(p, q) + 1e-9
        assert relative_min_entropy(p, q) >= -1e-12
        assert relative_entropy(marginal(p, "A"), marginal(q, "A")) <= kl + 1e-9

    @given(tables(names=("A", "B")))
    @settings(max_examples=40, deadline=None)
    def test_markov_projection_cmi_zero(self, d):
        e = markov_extend(d, ConditionalKernel.copy_of(d.alphabet("B"), "C"))
        assert conditional_mutual_information(e, "A", "C", "B") == pytest.approx(0, abs=1e-9)


class TestExact:
    def test_logsum_is_exact(self):
        assert LogSum.log2(Fraction(6)) == LogSum.log2(2) + LogSum.log2(3)
        assert LogSum.log2(Fraction(1, 4)) == LogSum.log2(2) * -2
        assert float(LogSum.log2(Fraction(3, 2))) == pytest.approx(math.log2(1.5))
        with pytest.raises(ValueError):
            LogSum.log2(0)

    def test_exact_chain_rule(self, rng):
        d = info.as_exact(random_table(rng, (2, 3, 2), ["A", "B", "C"]), max_denominator=97)
        lhs = mutual_information(d, "A", ["B", "C"])
        rhs = mutual_information(d, "A", "B") + conditional_mutual_information(d, "A", "C", "B")
        assert isinstance(lhs, LogSum) and lhs == rhs

    def test_exact_markov_projection(self, rng):
        d = info.as_exact(random_table(rng, (2, 2, 3), ["A", "B", "C"]), max_denominator=50)
        assert conditional_mutual_information(d, "A", "C", "B") == relative_entropy(d, markov_projection(d, "A", "B", "C"))

    def test_exact_l1_is_fraction(self):
        a = info.as_exact(vec([0.75, 0.25]))
        b = info.as_exact(vec([0.5, 0.5]))
        assert l1_distance(a, b) == Fraction(1, 4)


class TestJson:
    def test_round_trip_bytes(self, rng):
        d = random_table(rng, (2, 3), ["X", "Y"])
        text = info.dumps(d)
        assert info.dumps(info.loads(text)) == text

    def test_tuple_symbols(self):
        d = JointDistribution.from_array([0.5, 0.5], ["P"], [[(0, 1), (1, 0)]])
        assert info.loads(info.dumps(d)).axes == d.axes

    def test_sum_tolerance(self):
        obj = {"axes": [{"name": "A", "symbols": [0, 1]}], "probs": [0.5, 0.5 + 5e-10]}
        assert info.from_json_dict(obj).probs.sum() == pytest.approx(1.0, abs=1e-15)
        obj["probs"] = [0.5, 0.5 + 1e-8]
        with pytest.raises(DistributionError):
            info.from_json_dict(obj)

    @pytest.mark.parametrize("bad", [
        {"probs": [1.0]},
        {"axes": [{"name": "A", "symbols": [0, 1]}], "probs": [1.0]},
        {"axes": [{"name": "A", "symbols": [0, 1]}], "probs": [1.5, -0.5]},
        {"axes": [{"name": "A"}], "probs": [1.0]},
    ])
    def test_malformed(self, bad):
        with pytest.raises(DistributionError):
            info.from_json_dict(json.loads(json.dumps(bad)))
