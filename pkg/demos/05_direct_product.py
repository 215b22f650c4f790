"""Success of k-fold protocols, per-coordinate quantities and coordinate extraction."""

import itertools

from dpcomm import harness as H
from dpcomm import problems as P
from dpcomm import protocols as Q
from dpcomm.compression import CompressionParams
from dpcomm.info import Alphabet, JointDistribution

eq = P.equality_relation()
mu = JointDistribution.uniform((eq.x_alphabet, eq.y_alphabet))

# independent repetition: success decays exactly as p^r
base = P.noisy_equality_protocol(0.2)
decay = H.direct_product_decay(P.independent_repetition(base, 4), eq, mu, 4)
print("independent repetition:", [round(v, 6) for v in decay.prefix_success])

# a correlated 2-fold protocol: both coordinates succeed exactly when x_1 = 1
f2 = P.product_relation(eq, 2)
pairs = list(itertools.product((0, 1), repeat=2))


def answer(y, m):
    x1, x2 = divmod(m, 2)
    eq2 = int(x2 == y[1])
    return 2 * y[0] + (eq2 if x1 == 1 else 1 - eq2)


proto = Q.DeterministicProtocol(f2.x_alphabet, f2.y_alphabet, f2.z_alphabet, (Alphabet("M1", tuple(range(4))),),
                                (Q.LookupTable([2 * a + b for a, b in pairs]),),
                                Q.LookupTable([[answer(y, m) for m in range(4)] for y in pairs]))
decay = H.direct_product_decay(proto, eq, mu, 2)
for row in decay.rows():
    print(row)

# what conditioning on the second coordinate's success does to the first
res = H.analyze_coordinates(proto, eq, mu, 2, C=(1,), delta=0.05, delta1=0.1)
for row in res.rows():
    print(row)
print("sanity checks hold:", res.sanity_ok)

# coordinate 0 fails the closeness thresholds (x_1 is pinned to 1), so extracting it certifies nothing
out = H.end_to_end_pipeline(proto, eq, mu, 2, CompressionParams(eps_prime=0.05), 20_000, seed=1, C=(1,), coins=8)
print("adversarial: composed error", out.composed_error, "<= bound", out.composed_error_bound)

# an honest protocol (Alice sends x, Bob compares) extracts cleanly
honest = Q.DeterministicProtocol(f2.x_alphabet, f2.y_alphabet, f2.z_alphabet, (Alphabet("M1", tuple(range(4))),),
                                 (Q.LookupTable([2 * a + b for a, b in pairs]),),
                                 Q.LookupTable([[2 * int(m // 2 == y[0]) + int(m % 2 == y[1]) for m in range(4)]
                                                for y in pairs]))
out = H.end_to_end_pipeline(honest, eq, mu, 2, CompressionParams(eps_prime=0.05), 20_000, seed=1, coins=8)
print("honest: composed error", out.composed_error, "<= bound", out.composed_error_bound,
      "simulation l1", out.simulation.l1_to_target)
print("best fixed coin", out.best_fixed_coin_error, "average", out.average_fixed_coin_error)
