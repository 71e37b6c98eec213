"""Minimum-norm problems and closed-form prediction of their optimal-value change.

A phase-one problem minimizes ||x||^2 subject to A1 @ x = b1 and has the
classical closed-form solution

    x*    = A1^T (A1 A1^T)^-1 b1
    cov   = I - A1^T (A1 A1^T)^-1 A1      (projector onto the null space)
    f*    = b1^T (A1 A1^T)^-1 b1

When a second constraint block A2 @ x = b2 arrives, the increase of the
optimal value is available in closed form from the phase-one solution alone:

    delta_f = (A2 x* - b2)^T [A2 cov A2^T]^-1 (A2 x* - b2)

so the stacked optimum is f* + delta_f without re-solving. ``solve_stacked``
solves the stacked problem directly and serves as the exactness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import DimensionMismatch, NotSPD, as_matrix, as_vector, numerical_rank, solve_spd


class RankDeficient(ValueError):
    """Constraint matrix does not have full row rank."""


class SingularW(ValueError):
    """A2 cov A2^T failed its SPD factorization.

    The new constraint rows are (numerically) dependent on the old row
    space, so the prediction is undefined.
    """


@dataclass(frozen=True)
class LeastNormProblem:
    """min ||x||^2 subject to A @ x = b, with A of shape (m, n), m <= n."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        b = as_vector(self.b, size=A.shape[0], name="b")
        if A.shape[0] > A.shape[1]:
            raise DimensionMismatch(
                f"need m <= n for a least-norm problem, got shape {A.shape}"
            )
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PhaseSolution:
    """Optimal point, its covariance (null-space projector), and optimal value."""

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


def solve_least_norm(p: LeastNormProblem) -> PhaseSolution:
    """Closed-form solution of a full-row-rank least-norm problem.

    Computes x* = A^T (A A^T)^-1 b, the null-space projector covariance and
    f* = b^T (A A^T)^-1 b through a QR factorization of A^T (A^T = Q R, so
    x* = Q R^-T b and cov = I - Q Q^T): the same closed forms, at the
    conditioning of A instead of its square.
    """
    if numerical_rank(p.A) < p.m:
        raise RankDeficient(f"A has numerical rank < {p.m}")
    if p.m == 0:
        return PhaseSolution(x_star=np.zeros(p.n), cov=np.eye(p.n), f_star=0.0)
    q, r = np.linalg.qr(p.A.T)
    z = scipy.linalg.solve_triangular(r.T, p.b, lower=True, check_finite=False)
    x = q @ z
    cov = np.eye(p.n) - q @ q.T
    cov = 0.5 * (cov + cov.T)
    f = float(z @ z)
    return PhaseSolution(x_star=x, cov=cov, f_star=f)


def _weighted_residual_square(residual: np.ndarray, W: np.ndarray) -> float:
    """r^T W^-1 r with W SPD; raises SingularW when the factorization fails."""
    if residual.size == 0:
        return 0.0
    try:
        z = solve_spd(W, residual)
    except NotSPD as exc:
        raise SingularW(str(exc)) from exc
    return max(float(residual @ z), 0.0)


def predict_delta_f(phase1: PhaseSolution, A2, b2) -> float:
    """Predicted increase of the optimal value when adding A2 @ x = b2.

    Pure function of the phase-one solution and the new constraint block;
    the caller obtains the stacked optimum as ``phase1.f_star + delta_f``.
    """
    A2 = as_matrix(A2, cols=phase1.x_star.shape[0], name="A2")
    b2 = as_vector(b2, size=A2.shape[0], name="b2")
    residual = A2 @ phase1.x_star - b2
    W = A2 @ phase1.cov @ A2.T
    W = 0.5 * (W + W.T)
    return _weighted_residual_square(residual, W)


def solve_stacked(p1: LeastNormProblem, A2, b2) -> PhaseSolution:
    """Solve the stacked problem with constraints [A1; A2] @ x = [b1; b2].

    This is the ground-truth oracle the prediction is checked against. An
    empty A2 (zero rows) reduces to ``solve_least_norm(p1)``.
    """
    A2 = np.asarray(A2, dtype=float)
    if A2.size == 0:
        A2 = A2.reshape(0, p1.n)
    A2 = as_matrix(A2, cols=p1.n, name="A2")
    b2 = as_vector(b2, size=A2.shape[0], name="b2")
    stacked = LeastNormProblem(
        A=np.vstack([p1.A, A2]), b=np.concatenate([p1.b, b2])
    )
    return solve_least_norm(stacked)
