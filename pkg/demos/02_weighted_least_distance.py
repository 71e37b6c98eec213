"""The same incremental pricing for weighted least-distance objectives.

The problem min (Hx - h)^T Sigma^-1 (Hx - h) s.t. A1 x = b1 converts to a
least-norm problem by whitening; the solution covariance has the explicit
form Q - Q A1^T (A1 Q A1^T)^-1 A1 Q with Q = H^-1 Sigma H^-T. Both facts
are exercised below.
"""

import numpy as np

from costpredict import (
    LeastDistanceProblem,
    predict_delta_f_ld,
    solve_ld,
    solve_least_norm,
    to_least_norm,
)

rng = np.random.default_rng(7)
n = 8

M = rng.standard_normal((n, n))
problem = LeastDistanceProblem(
    H=rng.standard_normal((n, n)) + 3.0 * np.eye(n),
    Sigma=M @ M.T + 0.5 * np.eye(n),
    h=rng.standard_normal(n),
    A1=rng.standard_normal((3, n)),
    b1=rng.standard_normal(3),
)
sol = solve_ld(problem)
print(f"phase one optimal value f* = {sol.f_star:.6f}")

# the covariance from the whitening route matches the explicit formula
norm_problem, transform = to_least_norm(problem)
y_sol = solve_least_norm(norm_problem)
cov_via_transform = transform.matrix @ y_sol.cov @ transform.matrix.T
print(f"max |cov_explicit - cov_transform| = {np.abs(sol.cov - cov_via_transform).max():.2e}\n")

A2 = rng.standard_normal((2, n))
b2 = rng.standard_normal(2)
delta = predict_delta_f_ld(sol, A2, b2)

stacked = LeastDistanceProblem(
    H=problem.H, Sigma=problem.Sigma, h=problem.h,
    A1=np.vstack([problem.A1, A2]), b1=np.concatenate([problem.b1, b2]),
)
f_full = solve_ld(stacked).f_star
print(f"predicted stacked optimum: {sol.f_star + delta:.9f}")
print(f"solved    stacked optimum: {f_full:.9f}")
print(f"difference:                {abs(sol.f_star + delta - f_full):.2e}")
