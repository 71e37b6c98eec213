"""Weighted least-distance problems: transform to least-norm form and predict.

The problem

    min (H x - h)^T Sigma^-1 (H x - h)   s.t.  A1 @ x = b1

with H invertible and Sigma SPD converts to a least-norm problem in
y = Sigma^-1/2 (H x - h): the constraint matrix becomes A1 H^-1 Sigma^1/2
and the right-hand side b1 - A1 H^-1 h. The solution covariance has the
explicit form

    cov = Q - Q A1^T (A1 Q A1^T)^-1 A1 Q,    Q = H^-1 Sigma H^-T

which is the production path here; the transform route to the same matrix
is exercised by the test suite as a cross-check. The optimal-value change
under new constraints A2 @ x = b2 uses the same quadratic form as the
least-norm case and is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .leastnorm import LeastNormProblem, _weighted_residual_square
from .linalg import (
    DimensionMismatch,
    as_matrix,
    as_vector,
    numerical_rank,
    solve_spd,
    symmetric_sqrt,
)


class SingularH(ValueError):
    """The map H of a least-distance problem is singular at working tolerance."""


@dataclass(frozen=True)
class LeastDistanceProblem:
    """min (H x - h)^T Sigma^-1 (H x - h) subject to A1 @ x = b1."""

    H: np.ndarray
    Sigma: np.ndarray
    h: np.ndarray
    A1: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        H = as_matrix(self.H, name="H")
        n = H.shape[0]
        if H.shape[1] != n:
            raise DimensionMismatch(f"H must be square, got {H.shape}")
        Sigma = as_matrix(self.Sigma, rows=n, cols=n, name="Sigma")
        h = as_vector(self.h, size=n, name="h")
        A1 = as_matrix(self.A1, cols=n, name="A1")
        b1 = as_vector(self.b1, size=A1.shape[0], name="b1")
        for arr in (H, Sigma, h, A1, b1):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "b1", b1)

    @property
    def n(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class LDPhaseSolution:
    """Least-distance phase solution: point, covariance, optimal value."""

    x_star: np.ndarray
    cov: np.ndarray
    f_star: float

    def __post_init__(self):
        x = as_vector(self.x_star, name="x_star")
        c = as_matrix(self.cov, rows=x.shape[0], cols=x.shape[0], name="cov")
        x.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "x_star", x)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "f_star", float(self.f_star))


@dataclass(frozen=True)
class NormTransform:
    """Affine map x = matrix @ y + offset recovering x from the least-norm variable."""

    matrix: np.ndarray
    offset: np.ndarray


def to_least_norm(p: LeastDistanceProblem) -> tuple[LeastNormProblem, NormTransform]:
    """Convert to least-norm form; also return the map back to x."""
    if numerical_rank(p.H) < p.n:
        raise SingularH("H is singular at working tolerance")
    S = symmetric_sqrt(p.Sigma)
    lu = scipy.linalg.lu_factor(p.H, check_finite=False)
    Hinv_S = scipy.linalg.lu_solve(lu, S, check_finite=False)
    offset = scipy.linalg.lu_solve(lu, p.h, check_finite=False)
    problem = LeastNormProblem(A=p.A1 @ Hinv_S, b=p.b1 - p.A1 @ offset)
    return problem, NormTransform(matrix=Hinv_S, offset=offset)


def _projected_covariance(Q: np.ndarray, A1: np.ndarray) -> np.ndarray:
    """Q - Q A1^T (A1 Q A1^T)^-1 A1 Q, symmetrized."""
    if A1.shape[0] == 0:
        return 0.5 * (Q + Q.T)
    A1Q = A1 @ Q
    G = A1 @ A1Q.T
    G = 0.5 * (G + G.T)
    cov = Q - A1Q.T @ solve_spd(G, A1Q)
    return 0.5 * (cov + cov.T)


def solve_ld(p: LeastDistanceProblem) -> LDPhaseSolution:
    """Solve via the least-norm transform; covariance by the explicit Q formula."""
    from .leastnorm import solve_least_norm

    norm_problem, transform = to_least_norm(p)
    y_sol = solve_least_norm(norm_problem)
    x = transform.matrix @ y_sol.x_star + transform.offset

    lu = scipy.linalg.lu_factor(p.H, check_finite=False)
    X = scipy.linalg.lu_solve(lu, p.Sigma, check_finite=False)
    Q = scipy.linalg.lu_solve(lu, X.T, check_finite=False).T
    Q = 0.5 * (Q + Q.T)
    cov = _projected_covariance(Q, p.A1)
    return LDPhaseSolution(x_star=x, cov=cov, f_star=y_sol.f_star)


def predict_delta_f_ld(sol: LDPhaseSolution, A2, b2) -> float:
    """Optimal-value increase when adding A2 @ x = b2; exact in the linear case."""
    A2 = as_matrix(A2, cols=sol.x_star.shape[0], name="A2")
    b2 = as_vector(b2, size=A2.shape[0], name="b2")
    residual = A2 @ sol.x_star - b2
    W = A2 @ sol.cov @ A2.T
    W = 0.5 * (W + W.T)
    return _weighted_residual_square(residual, W)
