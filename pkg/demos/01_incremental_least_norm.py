"""Predict how the optimal value of a least-norm problem grows when new
constraints arrive, without re-solving.

Phase one solves min ||x||^2 s.t. A1 x = b1 once. Each candidate block
(A2, b2) is then priced from the stored solution and covariance alone; the
stacked solve is run only to show the prediction is exact.
"""

import numpy as np

from costpredict import LeastNormProblem, predict_delta_f, solve_least_norm, solve_stacked

rng = np.random.default_rng(2024)
n = 12

phase1_problem = LeastNormProblem(A=rng.standard_normal((4, n)), b=rng.standard_normal(4))
phase1 = solve_least_norm(phase1_problem)
print(f"phase one: {phase1_problem.m} constraints over {n} variables, f* = {phase1.f_star:.6f}")
print(f"covariance is the null-space projector: trace = {np.trace(phase1.cov):.1f} "
      f"(= {n} - {phase1_problem.m} free directions)\n")

print("pricing five candidate measurement blocks against the stacked solve:")
print(f"{'block':>5} {'predicted f**':>15} {'stacked f**':>15} {'difference':>12}")
for k in range(5):
    A2 = rng.standard_normal((2, n))
    b2 = rng.standard_normal(2)
    predicted = phase1.f_star + predict_delta_f(phase1, A2, b2)
    actual = solve_stacked(phase1_problem, A2, b2).f_star
    print(f"{k:>5} {predicted:>15.9f} {actual:>15.9f} {abs(predicted - actual):>12.2e}")

print("\nthe candidates share one phase-one solution: only a 2x2 solve each,")
print("no re-factorization of the stacked system.")
