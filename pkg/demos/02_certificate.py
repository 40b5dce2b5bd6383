"""
Certifying non-integrability
============================

A nonzero Melnikov coefficient ``Mhat_l`` with ``l != 0`` makes the two
local monodromies of the extended variational system fail to commute.  The
certificate records which harmonics witness this.
"""

# %%
import numpy as np

from nonintegrability.adjoint import compute_psi2
from nonintegrability.galois import certify, monodromy_pair
from nonintegrability.melnikov import melnikov_function
from nonintegrability.problems import load_problem


def run(params, c=1.0):
    prob = load_problem("rigid_body", params)
    psi2 = compute_psi2(prob.system, prob.conn, c)
    mr = melnikov_function(prob.system, prob.conn, prob.forcing, psi2, c)
    return prob, mr, certify(mr, prob.conn.decay_at(c), prob.forcing.nu)


# %%
# Default forcing: the first harmonic is present, so the verdict is positive.
prob, mr, cert = run({})
print(cert.verdict.value, "witnesses", cert.witness_harmonics)
print(cert.neighborhood_note)

# %%
# The monodromy pair behind the first witness, in 30 digit arithmetic.
pair = monodromy_pair(prob.conn.decay_at(1.0), prob.forcing.nu, 1, mr.coeffs[1])
print("commutator norm:", pair.commutator_norm)
print(np.round(pair.as_complex("commutator"), 3))

# %%
# Pure damping contributes only to ``Mhat_0``; nothing is certified.
_, mr_d, cert_d = run({"alpha": 0.0, "beta3": 0.0, "delta1": 0.05, "delta3": 0.3})
print(cert_d.verdict.value, {j: abs(m) for j, m in mr_d.coeffs.items()})
