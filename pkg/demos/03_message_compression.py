"""Sending a message that carries little information about the sender's input."""

import numpy as np

from dpcomm import info
from dpcomm.compression import CompressionParams, br_simulate, compress_round, log_ratio_exceedance, simulate_multiround
from dpcomm.info import JointDistribution

rng = np.random.default_rng(7)

# one message M drawn from X alone; Bob knows a correlated Y
pxy = np.array([[0.35, 0.15], [0.1, 0.4]])
kernel = np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
d = JointDistribution.from_array(pxy[:, :, None] * kernel[:, None, :], ["X", "Y", "M"])
print("I(X:M|Y) =", info.conditional_mutual_information(d, "X", "M", "Y"))

# pick a cutoff whose log-ratio exceedance is below delta, then simulate
cutoff = 2.0
print("exceedance at cutoff", cutoff, "=", log_ratio_exceedance(d, cutoff))
res = br_simulate(d, CompressionParams(cutoff=cutoff, delta=0.05), 100_000, seed=1)
print("one-shot: bits", res.bits_sent, "l1", res.l1_to_target, "<= bound", res.certified_bound, "+ slack", res.slack)

# the budgeted version picks the cutoff (c + 5)/eps' from the information budget
c = info.conditional_mutual_information(d, "X", "M", "Y")
res = compress_round(d, c, 0.0, 0.1, 100_000, seed=2)
print("budgeted: bits", res.bits_sent, "l1", res.l1_to_target, "<= bound", res.certified_bound, "+ slack", res.slack)

# three rounds, each message drawn from its sender's view and the messages so far
p = pxy.copy()
for s in range(1, 4):
    own = 0 if s % 2 == 1 else 1
    shape = tuple(p.shape[i] for i in range(p.ndim) if i != 1 - own)
    k = np.expand_dims(rng.dirichlet(np.ones(2), size=shape), axis=1 - own)
    p = p[..., None] * k
t3 = JointDistribution.from_array(p, ["X", "Y", "M1", "M2", "M3"])
res = simulate_multiround(t3, CompressionParams(eps_prime=0.05), 100_000, seed=3)
print("three rounds: budgets", np.round(res.diagnostics["budgets"], 4), "bits", res.bits_sent)
print("  l1", res.l1_to_target, "<= certified", res.certified_bound, "+ slack", res.slack, "ok:", res.ok)
