"""The t-message pointer-chasing baseline costs t * ceil(log2 n) bits and never errs."""

import numpy as np

from dpcomm import problems as P
from dpcomm import protocols as Q

rng = np.random.default_rng(3)
inst = P.PointerChasingInstance.random(8, 3, rng)
print("Alice's function", inst.fa)
print("Bob's function  ", inst.fb)

proto = P.naive_protocol(8, 3)
transcript, z = Q.run(proto, inst.x_code, inst.y_code)
print("messages (the chased pointers):", transcript, "output:", z, "expected:", P.fp_eval(inst))
print("cost:", Q.communication_cost(proto), "bits")

# exhaustive check over all function pairs for a small n
for t in (1, 2, 3):
    err = Q.distributional_error(P.naive_protocol(4, t), P.PointerChasingRelation(4, t), P.pointer_inputs(4))
    print(f"n=4 t={t}: error over all {4**8} inputs = {err}")
