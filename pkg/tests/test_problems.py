import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcomm import problems as P
from dpcomm import protocols as Q
from dpcomm.info import Alphabet, JointDistribution
from dpcomm.protocols import SizeError


def functions(n):
    return st.lists(st.integers(1, n), min_size=n, max_size=n).map(tuple)


instances = st.integers(2, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, 5), functions(n), functions(n))
).map(lambda a: P.PointerChasingInstance(*a))


class TestPointerChasing:
    def test_identity(self):
        ident = tuple(range(1, 5))
        for t in range(1, 5):
            inst = P.PointerChasingInstance(4, t, ident, ident)
            assert P.fp_eval(inst) == 1 and P.bp_eval(inst) == 0

    def test_hand_composition(self):
        inst = P.PointerChasingInstance(4, 2, (3, 1, 1, 1), (1, 1, 2, 1))
        assert P.fp_eval(inst) == 2
        assert P.bp_eval(inst) == 1

    def test_single_step(self):
        inst = P.PointerChasingInstance(4, 1, (3, 1, 1, 1), (1, 1, 2, 1))
        assert P.fp_eval(inst) == 3

    def test_rejects_bad_functions(self):
        with pytest.raises(ValueError):
            P.PointerChasingInstance(3, 1, (1, 2, 4), (1, 1, 1))
        with pytest.raises(ValueError):
            P.PointerChasingInstance(3, 0, (1, 2, 3), (1, 1, 1))

    @given(instances)
    @settings(max_examples=100, deadline=None)
    def test_coding(self, inst):
        assert P.decode_function(inst.x_code, inst.n) == inst.fa
        assert int(P.fp_eval_coded(inst.x_code, inst.y_code, inst.n, inst.t)) == P.fp_eval(inst) - 1
        assert P.PointerChasingInstance.from_json_dict(inst.to_json_dict()) == inst

    @given(instances)
    @settings(max_examples=100, deadline=None)
    def test_naive_protocol_is_correct(self, inst):
        p = P.naive_protocol(inst.n, inst.t)
        transcript, z = Q.run(p, inst.x_code, inst.y_code)
        assert z == P.fp_eval(inst)
        # the messages are the chased pointers
        ptr, chased = 1, []
        for s in range(1, inst.t + 1):
            ptr = (inst.fa if s % 2 == 1 else inst.fb)[ptr - 1]
            chased.append(ptr)
        assert list(transcript) == chased
        _, zb = Q.run(P.naive_protocol(inst.n, inst.t, bit=True), inst.x_code, inst.y_code)
        assert zb == P.bp_eval(inst)

    @pytest.mark.parametrize("n,t,bits", [(8, 3, 9), (2, 1, 1), (4, 2, 4), (5, 3, 9)])
    def test_cost(self, n, t, bits):
        assert Q.communication_cost(P.naive_protocol(n, t)) == bits == t * math.ceil(math.log2(n))

    def test_exhaustive_error(self):
        for n, t in itertools.product(range(2, 5), range(1, 4)):
            for bit in (False, True):
                f = P.PointerChasingRelation(n, t, bit)
                assert Q.distributional_error(P.naive_protocol(n, t, bit), f, P.pointer_inputs(n)) == 0

    def test_relation_by_loops(self):
        f = P.PointerChasingRelation(3, 2)
        acc = f.accepts
        for x, y in itertools.product(range(27), repeat=2):
            inst = P.PointerChasingInstance(3, 2, P.decode_function(x, 3), P.decode_function(y, 3))
            assert acc[x, y].nonzero()[0].tolist() == [P.fp_eval(inst) - 1]

    def test_needs_two_pointers(self):
        with pytest.raises(ValueError):
            P.naive_protocol(1, 2)

    def test_relation_table_cap(self):
        with pytest.raises(SizeError):
            P.PointerChasingRelation(8, 3).accepts


class TestProducts:
    def test_k1_is_base(self):
        f = P.equality_relation()
        fk = P.product_relation(f, 1)
        np.testing.assert_array_equal(fk.accepts, f.accepts)

    def test_conjunction(self):
        f = P.equality_relation()
        fk = P.product_relation(f, 2)
        acc = fk.accepts
        for (xi, x), (yi, y), (zi, z) in itertools.product(*(enumerate(a.symbols) for a in
                                                              (fk.x_alphabet, fk.y_alphabet, fk.z_alphabet))):
            want = all(z[i] == int(x[i] == y[i]) for i in range(2))
            assert acc[xi, yi, zi] == want

    def test_product_inputs(self, rng):
        mu = JointDistribution.from_array(rng.dirichlet(np.ones(4)).reshape(2, 2), ["X", "Y"])
        mu2 = P.product_inputs(mu, 2)
        x = mu2.axes[0].index((1, 0))
        y = mu2.axes[1].index((0, 1))
        assert mu2.probs[x, y] == pytest.approx(mu.probs[1, 0] * mu.probs[0, 1])

    def test_noisy_equality_success(self):
        f = P.equality_relation()
        mu = JointDistribution.uniform((f.x_alphabet, f.y_alphabet))
        assert Q.distributional_error(P.noisy_equality_protocol(0.1), f, mu) == pytest.approx(0.1)

    def test_repetition_success_multiplies(self):
        f = P.equality_relation()
        mu = JointDistribution.uniform((f.x_alphabet, f.y_alphabet))
        rep = P.independent_repetition(P.noisy_equality_protocol(0.1), 3)
        err = Q.distributional_error(rep, P.product_relation(f, 3), P.product_inputs(mu, 3))
        assert 1 - err == pytest.approx(0.729, abs=1e-12)
        shared = P.independent_repetition(P.noisy_equality_protocol(0.1), 3, shared_coins=True)
        err = Q.distributional_error(shared, P.product_relation(f, 3), P.product_inputs(mu, 3))
        assert 1 - err == pytest.approx(0.9, abs=1e-12)

    def test_repetition_of_guess_squares(self):
        # Bob guesses equality from his own bit: success 1/2 per coordinate
        f = P.equality_relation()
        xa, ya, za = f.x_alphabet, f.y_alphabet, f.z_alphabet
        p = Q.DeterministicProtocol(xa, ya, za, (Alphabet("M1", (0,)),), (Q.LookupTable([0, 0]),),
                                    Q.LookupTable([[0], [1]]))
        mu = JointDistribution.uniform((xa, ya))
        rep = P.independent_repetition(p, 2)
        err = Q.distributional_error(rep, P.product_relation(f, 2), P.product_inputs(mu, 2))
        assert 1 - err == pytest.approx(0.25, abs=1e-15)
