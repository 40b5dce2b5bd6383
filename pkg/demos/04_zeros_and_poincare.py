"""
Transverse intersections and a stroboscopic section
===================================================

Simple zeros of ``M(theta)`` locate transverse crossings of the perturbed
stable and unstable manifolds.  Damping shifts ``M`` by a constant and,
when strong enough, removes every zero.
"""

# %%
import numpy as np

from nonintegrability import rigidbody as rb
from nonintegrability.adjoint import compute_psi2
from nonintegrability.integrate import IntegratorConfig, integrate_rhs
from nonintegrability.melnikov import find_simple_zeros, melnikov_function
from nonintegrability.problems import load_problem

c = 1.0
for delta3 in (0.0, 0.2, 0.6):
    prob = load_problem("rigid_body", {"delta3": delta3})
    psi2 = compute_psi2(prob.system, prob.conn, c)
    mr = melnikov_function(prob.system, prob.conn, prob.forcing, psi2, c)
    zeros = find_simple_zeros(mr)
    print(f"delta3 = {delta3}: ", [(round(z.theta0, 6), z.is_simple) for z in zeros])

# %%
# Without damping the zeros sit at ``atan2(-alpha M1, beta3 M2)`` and half a
# turn later.
M1, M2, M3 = rb.melnikov_constants(rb.RigidBodyParams(), c)
print("predicted:", np.sort(np.mod(np.arctan2(-M1, M2) + np.array([0.0, np.pi]), 2 * np.pi)))
print("damping threshold for delta3:", np.hypot(M1, M2) / M3)

# %%
# Stroboscopic samples of the forced flow, one per forcing period, starting
# near the heteroclinic orbit.
prob = load_problem("rigid_body")
period = 2 * np.pi / prob.forcing.nu
x0 = prob.conn.state(-4.0, c)
traj = integrate_rhs(prob.forced_rhs(0.05), x0, (0.0, 20 * period), IntegratorConfig(1e-12, 1e-12))
for k in range(0, 21, 4):
    print(k, traj(k * period))
