"""Minimal dense linear-algebra kernel shared by every other module.

Matrices are float64 numpy arrays stored row-major; vectors are 1-D arrays.
Constructors reject non-finite entries. Inverses appearing in downstream
formulas are always realized as factor-and-solve, never as explicit
inverses, except where a covariance/projector matrix is itself the result.

CSV serialization is plain comma-separated rows, no header, written with 17
significant digits so float64 values round-trip exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class NotSPD(ValueError):
    """Matrix is not symmetric positive definite."""


class SingularBlock(ValueError):
    """Pivot block of a block decomposition is singular at working tolerance."""


# Relative tolerance for the symmetry check in solve_spd / symmetric_sqrt.
SYMMETRY_RTOL = 1e-12


def as_matrix(a, rows=None, cols=None, name="matrix") -> np.ndarray:
    """Validate and convert to a 2-D float64 array (finite entries only)."""
    m = np.array(a, dtype=float, order="C")
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise DimensionMismatch(f"{name} must have {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionMismatch(f"{name} must have {cols} cols, got {m.shape[1]}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(a, size=None, name="vector") -> np.ndarray:
    """Validate and convert to a 1-D float64 array (finite entries only)."""
    v = np.array(a, dtype=float).reshape(-1) if np.ndim(a) <= 1 else np.array(a, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got ndim={v.ndim}")
    if size is not None and v.shape[0] != size:
        raise DimensionMismatch(f"{name} must have length {size}, got {v.shape[0]}")
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def _require_symmetric(M: np.ndarray, name="matrix") -> None:
    scale = np.abs(M).max() if M.size else 0.0
    gap = np.abs(M - M.T).max() if M.size else 0.0
    if gap > SYMMETRY_RTOL * max(scale, 1.0):
        raise NotSPD(f"{name} is not symmetric (asymmetry {gap:.3e}, scale {scale:.3e})")


def solve_spd(M, rhs):
    """Solve M @ X = rhs for symmetric positive definite M via Cholesky.

    ``rhs`` may be a vector or a matrix; the result has matching shape.
    Raises NotSPD if M is asymmetric beyond SYMMETRY_RTOL or the
    factorization hits a non-positive pivot.
    """
    M = as_matrix(M, name="M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    rhs_arr = np.asarray(rhs, dtype=float)
    if rhs_arr.shape[0] != M.shape[0]:
        raise DimensionMismatch(
            f"rhs has leading dimension {rhs_arr.shape[0]}, expected {M.shape[0]}"
        )
    if M.shape[0] == 0:
        return np.zeros_like(rhs_arr)
    _require_symmetric(M, "M")
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPD(f"Cholesky failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs_arr, check_finite=False)


def symmetric_sqrt(M):
    """Symmetric square root S of an SPD matrix M, with S @ S = M."""
    M = as_matrix(M, name="M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    _require_symmetric(M, "M")
    w, v = np.linalg.eigh(M)
    if M.size and w.min() <= 0.0:
        raise NotSPD(f"matrix has non-positive eigenvalue {w.min():.3e}")
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def numerical_rank(M, tol=None) -> int:
    """Count singular values above ``tol``.

    Default tol is the usual cutoff max(rows, cols) * eps * sigma_max.
    """
    M = as_matrix(M, name="M")
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps * sv[0]
    elif tol < 0:
        raise ValueError("tol must be >= 0")
    return int(np.count_nonzero(sv > tol))


def schur_decompose(U, P, Q, V):
    """Block-eliminate [[U, P], [Q, V]] around the upper-left block.

    Returns (lower, block_diag, upper) with

        lower      = [[I, 0], [Q U^-1, I]]
        block_diag = [[U, 0], [0, V - Q U^-1 P]]
        upper      = [[I, U^-1 P], [0, I]]

    whose product reconstructs the input block matrix. Raises SingularBlock
    if U is not invertible at working tolerance.
    """
    U = as_matrix(U, name="U")
    n1 = U.shape[0]
    if U.shape[1] != n1:
        raise DimensionMismatch(f"U must be square, got {U.shape}")
    P = as_matrix(P, rows=n1, name="P")
    n2 = P.shape[1]
    Q = as_matrix(Q, rows=n2, cols=n1, name="Q")
    V = as_matrix(V, rows=n2, cols=n2, name="V")

    if numerical_rank(U) < n1:
        raise SingularBlock("upper-left block is singular at working tolerance")
    lu = scipy.linalg.lu_factor(U, check_finite=False)
    Uinv_P = scipy.linalg.lu_solve(lu, P, check_finite=False)
    Q_Uinv = scipy.linalg.lu_solve(lu, Q.T, trans=1, check_finite=False).T

    n = n1 + n2
    lower = np.eye(n)
    lower[n1:, :n1] = Q_Uinv
    upper = np.eye(n)
    upper[:n1, n1:] = Uinv_P
    block_diag = np.zeros((n, n))
    block_diag[:n1, :n1] = U
    block_diag[n1:, n1:] = V - Q_Uinv @ P
    return lower, block_diag, upper


# CSV format: one row per line, "%.17g" fields, comma separated, no header.
_CSV_FMT = "%.17g"


def save_matrix(path, M) -> None:
    M = as_matrix(M, name="matrix")
    np.savetxt(path, M, fmt=_CSV_FMT, delimiter=",")


def load_matrix(path) -> np.ndarray:
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2), name="matrix")


def save_vector(path, v) -> None:
    v = as_vector(v, name="vector")
    np.savetxt(path, v, fmt=_CSV_FMT, delimiter=",")


def load_vector(path) -> np.ndarray:
    return as_vector(np.loadtxt(path, delimiter=",", ndmin=1), name="vector")
