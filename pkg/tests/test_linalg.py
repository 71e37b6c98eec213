import numpy as np
import pytest

from costpredict.linalg import (
    DimensionMismatch,
    NotSPD,
    SingularBlock,
    as_matrix,
    as_vector,
    load_matrix,
    load_vector,
    numerical_rank,
    save_matrix,
    save_vector,
    schur_decompose,
    solve_spd,
    symmetric_sqrt,
)

from oracles import random_invertible, random_spd


class TestSolveSpd:
    def test_identity(self):
        e2 = np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(solve_spd(np.eye(3), e2), e2)

    def test_diagonal(self):
        M = np.diag([4.0, 9.0])
        np.testing.assert_allclose(solve_spd(M, np.array([8.0, 27.0])), [2.0, 3.0])

    def test_dense_2x2(self):
        M = np.array([[2.0, 1.0], [1.0, 2.0]])
        x = solve_spd(M, np.array([3.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(M @ x, [3.0, 3.0], atol=1e-12)

    def test_matrix_rhs(self):
        rng = np.random.default_rng(0)
        M = random_spd(rng, 6)
        B = rng.standard_normal((6, 3))
        X = solve_spd(M, B)
        np.testing.assert_allclose(M @ X, B, atol=1e-9)

    def test_recovers_random_x(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = rng.integers(1, 12)
            M = random_spd(rng, n)
            x = rng.standard_normal(n)
            got = solve_spd(M, M @ x)
            assert np.linalg.norm(got - x) <= 1e-9 * max(1.0, np.linalg.norm(x))

    def test_rejects_asymmetric(self):
        M = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotSPD):
            solve_spd(M, np.zeros(2))

    def test_rejects_indefinite(self):
        M = np.array([[1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(NotSPD):
            solve_spd(M, np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_spd(np.eye(3), np.zeros(2))


class TestSymmetricSqrt:
    def test_identity(self):
        np.testing.assert_array_equal(symmetric_sqrt(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(symmetric_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_square_back_random(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            M = random_spd(rng, 5)
            S = symmetric_sqrt(M)
            assert np.abs(S - S.T).max() <= 1e-12 * np.abs(S).max()
            assert np.abs(S @ S - M).max() <= 1e-10 * np.abs(M).max()

    def test_rejects_indefinite(self):
        with pytest.raises(NotSPD):
            symmetric_sqrt(np.diag([1.0, -2.0]))


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(3)) == 3

    def test_rank_one(self):
        assert numerical_rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1

    def test_orthonormal_rows(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        assert numerical_rank(q.T) == 3

    def test_tol_override(self):
        M = np.diag([1.0, 1e-6])
        assert numerical_rank(M) == 2
        assert numerical_rank(M, tol=1e-3) == 1
        with pytest.raises(ValueError):
            numerical_rank(M, tol=-1.0)


class TestSchurDecompose:
    def test_identity_blocks(self):
        lower, diag, upper = schur_decompose(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2))
        np.testing.assert_array_equal(lower, np.eye(4))
        np.testing.assert_array_equal(upper, np.eye(4))
        np.testing.assert_array_equal(diag, np.eye(4))

    def test_scalar_blocks(self):
        # [[2, 1], [1, 2]] split into 1x1 blocks: complement 2 - 1 * (1/2) * 1.
        _, diag, _ = schur_decompose([[2.0]], [[1.0]], [[1.0]], [[2.0]])
        assert diag[1, 1] == pytest.approx(1.5, abs=1e-14)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            M = random_invertible(rng, 4)
            lower, diag, upper = schur_decompose(M[:2, :2], M[:2, 2:], M[2:, :2], M[2:, 2:])
            rebuilt = lower @ diag @ upper
            assert np.abs(rebuilt - M).max() <= 1e-10 * np.abs(M).max()

    def test_singular_block(self):
        with pytest.raises(SingularBlock):
            schur_decompose(np.zeros((2, 2)), np.eye(2), np.eye(2), np.eye(2))

    def test_conformality(self):
        with pytest.raises(DimensionMismatch):
            schur_decompose(np.eye(2), np.zeros((3, 2)), np.zeros((2, 2)), np.eye(2))


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_matrix([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            as_vector([np.inf])

    def test_shape_checks(self):
        with pytest.raises(DimensionMismatch):
            as_matrix(np.zeros((2, 2)), rows=3)
        with pytest.raises(DimensionMismatch):
            as_vector(np.zeros(2), size=3)


class TestCsvRoundTrip:
    def test_matrix_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((7, 3)) * np.exp(rng.uniform(-20, 20, (7, 3)))
        path = tmp_path / "m.csv"
        save_matrix(path, M)
        np.testing.assert_array_equal(load_matrix(path), M)

    def test_single_row(self, tmp_path):
        M = np.array([[1.25, -3.5, 0.1]])
        path = tmp_path / "row.csv"
        save_matrix(path, M)
        np.testing.assert_array_equal(load_matrix(path), M)

    def test_vector_exact(self, tmp_path):
        rng = np.random.default_rng(6)
        v = rng.standard_normal(9)
        path = tmp_path / "v.csv"
        save_vector(path, v)
        np.testing.assert_array_equal(load_vector(path), v)
