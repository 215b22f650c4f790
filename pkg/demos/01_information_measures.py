"""Information measures on a small joint table, in floats and exactly."""

import numpy as np

from dpcomm import info
from dpcomm.info import JointDistribution

# two correlated bits and a noisy copy of the second one
xy = np.array([[0.4, 0.1], [0.1, 0.4]])
noise = np.array([[0.9, 0.1], [0.1, 0.9]])
d = JointDistribution.from_array(xy[:, :, None] * noise[None, :, :], ["A", "B", "C"])

print("H(ABC)      =", info.entropy(d))
print("I(A:B)      =", info.mutual_information(d, "A", "B"))
print("I(A:C|B)    =", info.conditional_mutual_information(d, "A", "C", "B"))  # C sees A only through B

# chain rule: I(A:BC) = I(A:B) + I(A:C|B)
lhs = info.mutual_information(d, "A", ["B", "C"])
rhs = info.mutual_information(d, "A", "B") + info.conditional_mutual_information(d, "A", "C", "B")
print("chain rule gap =", abs(lhs - rhs))

# conditional mutual information is the divergence to the Markov projection (AB)(C|B)
# leak a little of A into C so the gap is nonzero
raw = d.probs + 0.05 * np.eye(2)[:, None, :]
e = JointDistribution.from_array(raw / raw.sum(), ["A", "B", "C"])
proj = info.markov_projection(e, "A", "B", "C")
print("I(A:C|B) =", info.conditional_mutual_information(e, "A", "C", "B"),
      " D(e || projection) =", info.relative_entropy(e, proj))

# the same identity with rationals: both sides are equal as linear forms in log2 of primes
q = info.as_exact(e, max_denominator=200)
print("exact:", info.conditional_mutual_information(q, "A", "C", "B")
      == info.relative_entropy(q, info.markov_projection(q, "A", "B", "C")))
