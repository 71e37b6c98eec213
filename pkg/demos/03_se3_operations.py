"""A quick tour of the SE(3) toolbox: exp/log, adjoint, left Jacobian.

Twists are 6-vectors (rho, phi): translation first, rotation second.
"""

import numpy as np

from costpredict import adjoint, boxminus, boxplus, exp, left_jacobian, left_jacobian_inv, log

rng = np.random.default_rng(11)

xi = np.array([0.4, -0.2, 0.7, 0.3, -0.5, 0.2])
T = exp(xi)
print("exp/log round trip:")
print(f"  twist      {xi}")
print(f"  recovered  {log(T)}\n")

T1 = exp(rng.uniform(-1, 1, 6))
T2 = exp(rng.uniform(-1, 1, 6))
lhs = adjoint(T1.compose(T2))
rhs = adjoint(T1) @ adjoint(T2)
print(f"adjoint is multiplicative: max |Ad(T1 T2) - Ad(T1) Ad(T2)| = {np.abs(lhs - rhs).max():.2e}")

eta = rng.uniform(-1, 1, 6)
prod = left_jacobian(eta) @ left_jacobian_inv(eta)
print(f"left Jacobian inverse:     max |J Jinv - I| = {np.abs(prod - np.eye(6)).max():.2e}")

delta = 1e-6 * rng.uniform(-1, 1, 6)
approx = exp(left_jacobian(eta) @ delta).compose(exp(eta))
exact = exp(eta + delta)
print(f"J_l maps additive to multiplicative perturbations: "
      f"defect {np.abs(boxminus(approx, exact)).max():.2e}\n")

small = 0.05 * rng.standard_normal(6)
print("box operators:")
print(f"  (T boxplus xi) boxminus-from-T recovers xi: "
      f"{np.abs(boxminus(T, boxplus(T, small)) - small).max():.2e}")
