import numpy as np
import pytest

from costpredict.leastnorm import (
    LeastNormProblem,
    RankDeficient,
    SingularW,
    predict_delta_f,
    solve_least_norm,
    solve_stacked,
)
from costpredict.linalg import DimensionMismatch, schur_decompose

from oracles import min_norm_pinv, random_full_row_rank


def random_problem(rng, m, n):
    return LeastNormProblem(A=random_full_row_rank(rng, m, n), b=rng.standard_normal(m))


class TestSolveLeastNorm:
    def test_single_constraint(self):
        sol = solve_least_norm(LeastNormProblem(A=[[1.0, 0.0]], b=[1.0]))
        np.testing.assert_allclose(sol.x_star, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(sol.cov, np.diag([0.0, 1.0]), atol=1e-12)
        assert sol.f_star == pytest.approx(1.0, abs=1e-12)

    def test_fully_constrained(self):
        sol = solve_least_norm(LeastNormProblem(A=np.eye(2), b=[3.0, 4.0]))
        np.testing.assert_allclose(sol.x_star, [3.0, 4.0], atol=1e-12)
        np.testing.assert_allclose(sol.cov, np.zeros((2, 2)), atol=1e-12)
        assert sol.f_star == pytest.approx(25.0, rel=1e-12)

    def test_lagrange_hand_solve(self):
        # min x^T x s.t. x1 + x2 = 2 has stationary point x = (1, 1), f = 2.
        sol = solve_least_norm(LeastNormProblem(A=[[1.0, 1.0]], b=[2.0]))
        np.testing.assert_allclose(sol.x_star, [1.0, 1.0], atol=1e-12)
        assert sol.f_star == pytest.approx(2.0, rel=1e-12)

    def test_matches_pinv_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n = int(rng.integers(2, 20))
            m = int(rng.integers(1, n + 1))
            p = random_problem(rng, m, n)
            sol = solve_least_norm(p)
            x_ref, f_ref = min_norm_pinv(p.A, p.b)
            assert np.linalg.norm(sol.x_star - x_ref) <= 1e-8 * max(1.0, np.linalg.norm(x_ref))
            assert sol.f_star == pytest.approx(f_ref, rel=1e-8, abs=1e-12)

    def test_solution_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 25))
            m = int(rng.integers(1, n + 1))
            p = random_problem(rng, m, n)
            sol = solve_least_norm(p)
            assert np.abs(p.A @ sol.x_star - p.b).max() <= 1e-9 * max(1.0, np.abs(p.b).max())
            assert sol.f_star == pytest.approx(float(sol.x_star @ sol.x_star), rel=1e-9, abs=1e-12)
            # cov is the null-space projector: symmetric, idempotent, annihilates rows of A
            assert np.abs(sol.cov - sol.cov.T).max() <= 1e-12
            assert np.abs(sol.cov @ sol.cov - sol.cov).max() <= 1e-9
            assert np.abs(sol.cov @ p.A.T).max() <= 1e-9
            assert sol.f_star >= 0.0

    def test_rank_deficient(self):
        p = LeastNormProblem(A=[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]], b=[1.0, 2.0])
        with pytest.raises(RankDeficient):
            solve_least_norm(p)

    def test_m_greater_n_rejected(self):
        with pytest.raises(DimensionMismatch):
            LeastNormProblem(A=np.ones((3, 2)), b=np.ones(3))


class TestPredictDeltaF:
    def test_hand_example(self):
        phase1 = solve_least_norm(LeastNormProblem(A=[[1.0, 0.0]], b=[1.0]))
        delta = predict_delta_f(phase1, [[0.0, 1.0]], [2.0])
        assert delta == pytest.approx(4.0, rel=1e-12)
        stacked = solve_stacked(LeastNormProblem(A=[[1.0, 0.0]], b=[1.0]), [[0.0, 1.0]], [2.0])
        np.testing.assert_allclose(stacked.x_star, [1.0, 2.0], atol=1e-12)
        assert phase1.f_star + delta == pytest.approx(stacked.f_star, rel=1e-12)
        assert stacked.f_star == pytest.approx(5.0, rel=1e-12)

    def test_zero_residual(self):
        rng = np.random.default_rng(12)
        p = random_problem(rng, 3, 8)
        phase1 = solve_least_norm(p)
        A2 = random_full_row_rank(rng, 2, 8)
        assert predict_delta_f(phase1, A2, A2 @ phase1.x_star) == pytest.approx(0.0, abs=1e-12)

    def test_exactness_random(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = int(rng.integers(4, 30))
            m1 = int(rng.integers(1, n - 1))
            m2 = int(rng.integers(1, n - m1 + 1))
            p1 = random_problem(rng, m1, n)
            A2 = random_full_row_rank(rng, m2, n)
            b2 = rng.standard_normal(m2)
            phase1 = solve_least_norm(p1)
            predicted = phase1.f_star + predict_delta_f(phase1, A2, b2)
            actual = solve_stacked(p1, A2, b2).f_star
            assert predicted == pytest.approx(actual, rel=1e-8, abs=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            p1 = random_problem(rng, 3, 10)
            phase1 = solve_least_norm(p1)
            A2 = random_full_row_rank(rng, 2, 10)
            assert predict_delta_f(phase1, A2, rng.standard_normal(2)) >= 0.0

    def test_singular_w(self):
        phase1 = solve_least_norm(LeastNormProblem(A=[[1.0, 0.0]], b=[1.0]))
        # A2 repeats the phase-one row, so A2 cov A2^T is exactly zero.
        with pytest.raises(SingularW):
            predict_delta_f(phase1, [[1.0, 0.0]], [3.0])


class TestSolveStacked:
    def test_empty_second_block(self):
        rng = np.random.default_rng(15)
        p1 = random_problem(rng, 3, 7)
        base = solve_least_norm(p1)
        stacked = solve_stacked(p1, np.zeros((0, 7)), np.zeros(0))
        np.testing.assert_array_equal(stacked.x_star, base.x_star)
        assert stacked.f_star == base.f_star

    def test_monotone(self):
        rng = np.random.default_rng(16)
        for _ in range(50):
            p1 = random_problem(rng, 3, 12)
            A2 = random_full_row_rank(rng, 2, 12)
            b2 = rng.standard_normal(2)
            assert solve_stacked(p1, A2, b2).f_star >= solve_least_norm(p1).f_star - 1e-10


class TestSchurConsistency:
    def test_gram_reconstruction(self):
        # Eliminating the A1 A1^T block of the stacked Gram matrix leaves
        # W = A2 cov A2^T as the trailing diagonal block.
        rng = np.random.default_rng(17)
        A1 = random_full_row_rank(rng, 3, 9)
        A2 = random_full_row_rank(rng, 2, 9)
        A = np.vstack([A1, A2])
        gram = A @ A.T
        lower, diag, upper = schur_decompose(gram[:3, :3], gram[:3, 3:], gram[3:, :3], gram[3:, 3:])
        rebuilt = lower @ diag @ upper
        assert np.abs(rebuilt - gram).max() <= 1e-10 * np.abs(gram).max()
        phase1 = solve_least_norm(LeastNormProblem(A=A1, b=rng.standard_normal(3)))
        W = A2 @ phase1.cov @ A2.T
        assert np.abs(diag[3:, 3:] - W).max() <= 1e-9 * max(1.0, np.abs(W).max())
