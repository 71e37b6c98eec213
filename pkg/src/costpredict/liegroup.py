"""SE(3) primitives: exp/log maps, adjoint, left Jacobian, box operators.

Twists are plain numpy 6-vectors ordered (rho, phi): translational part
first, rotational part second. All 6x6 operators (adjoint, left Jacobian)
follow the same ordering.

Conventions:
    boxplus(T, xi)   = T * Exp(xi)            retraction by a tangent vector
    boxminus(T1, T2) = Log(T1^-1 * T2)        T2 expressed relative to T1

The left Jacobian satisfies Exp(eta + delta) ~= Exp(J_l(eta) @ delta) * Exp(eta)
to first order; its inverse is returned in closed form. Rotation angles at or
near pi are rejected (log branch ambiguity) via NearPiRotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector


class NearPiRotation(ValueError):
    """Rotation angle within tolerance of pi: logarithm branch is ambiguous."""


# Below this rotation angle, series expansions replace the closed-form
# trigonometric coefficients (which would divide ~0 by ~0).
SMALL_ANGLE = 1e-8

# Rotations are re-orthonormalized by polar projection after this many
# compositions, so long chains cannot drift away from SO(3).
REORTHONORMALIZE_EVERY = 100

_ANGLE_MARGIN = 1e-9  # require trace(R) > -1 + margin, i.e. angle < pi - eps


def skew(v) -> np.ndarray:
    """3x3 skew-symmetric matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def twist(rho, phi) -> np.ndarray:
    """Assemble a twist from its translational and rotational parts."""
    return np.concatenate([as_vector(rho, size=3, name="rho"),
                           as_vector(phi, size=3, name="phi")])


def twist_parts(xi) -> tuple[np.ndarray, np.ndarray]:
    """(rho, phi) of a twist."""
    xi = as_vector(xi, size=6, name="twist")
    return xi[:3], xi[3:]


def _rot_coeffs(angle: float) -> tuple[float, float]:
    """(sin a / a, (1 - cos a) / a^2) with 4th-order series below SMALL_ANGLE."""
    if angle < SMALL_ANGLE:
        a2 = angle * angle
        return 1.0 - a2 / 6.0 + a2 * a2 / 120.0, 0.5 - a2 / 24.0 + a2 * a2 / 720.0
    return math.sin(angle) / angle, (1.0 - math.cos(angle)) / (angle * angle)


def _jac_coeff(angle: float) -> float:
    """(a - sin a) / a^3 with 4th-order series below SMALL_ANGLE."""
    if angle < SMALL_ANGLE:
        a2 = angle * angle
        return 1.0 / 6.0 - a2 / 120.0 + a2 * a2 / 5040.0
    return (angle - math.sin(angle)) / (angle ** 3)


def so3_exp(phi) -> np.ndarray:
    """Rodrigues rotation matrix of a rotation vector."""
    phi = np.asarray(phi, dtype=float)
    angle = math.sqrt(float(phi @ phi))
    a, b = _rot_coeffs(angle)
    K = skew(phi)
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R) -> np.ndarray:
    """Rotation vector of a rotation matrix; raises NearPiRotation near pi."""
    R = np.asarray(R, dtype=float)
    trace = float(R[0, 0] + R[1, 1] + R[2, 2])
    if trace <= -1.0 + _ANGLE_MARGIN:
        raise NearPiRotation(f"rotation trace {trace:.12f} too close to -1")
    angle = math.acos(min(1.0, max(-1.0, 0.5 * (trace - 1.0))))
    if angle < SMALL_ANGLE:
        a2 = angle * angle
        scale = 0.5 + a2 / 12.0 + 7.0 * a2 * a2 / 720.0
    else:
        scale = 0.5 * angle / math.sin(angle)
    return scale * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])


def _so3_left_jacobian(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    angle = math.sqrt(float(phi @ phi))
    _, b = _rot_coeffs(angle)
    c = _jac_coeff(angle)
    K = skew(phi)
    return np.eye(3) + b * K + c * (K @ K)


def _so3_left_jacobian_inv(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    angle = math.sqrt(float(phi @ phi))
    K = skew(phi)
    if angle < SMALL_ANGLE:
        a2 = angle * angle
        coeff = 1.0 / 12.0 + a2 / 720.0 + a2 * a2 / 30240.0
    else:
        coeff = 1.0 / (angle * angle) - (1.0 + math.cos(angle)) / (
            2.0 * angle * math.sin(angle)
        )
    return np.eye(3) - 0.5 * K + coeff * (K @ K)


def _polar_rotation(R: np.ndarray) -> np.ndarray:
    """Closest rotation matrix in the Frobenius sense (polar projection)."""
    u, _, vt = np.linalg.svd(R)
    out = u @ vt
    if np.linalg.det(out) < 0.0:
        out = (u * np.array([1.0, 1.0, -1.0])) @ vt
    return out


@dataclass(frozen=True)
class Pose:
    """Rigid transform with a 3x3 rotation and a translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray
    # Compositions since the last re-orthonormalization; bookkeeping only.
    age: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        R = as_matrix(self.rotation, rows=3, cols=3, name="rotation")
        t = as_vector(self.translation, size=3, name="translation")
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-10:
            raise ValueError("rotation is not orthonormal to 1e-10")
        if abs(np.linalg.det(R) - 1.0) > 1e-10:
            raise ValueError("rotation determinant is not +1 to 1e-10")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def _trusted(R: np.ndarray, t: np.ndarray, age: int = 0) -> "Pose":
        # Internal fast path for rotations that are orthonormal by
        # construction (products of valid rotations, Rodrigues outputs);
        # the periodic polar renormalization bounds any drift.
        p = object.__new__(Pose)
        object.__setattr__(p, "rotation", R)
        object.__setattr__(p, "translation", t)
        object.__setattr__(p, "age", age)
        return p

    @staticmethod
    def identity() -> "Pose":
        return Pose(rotation=np.eye(3), translation=np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        R = self.rotation @ other.rotation
        t = self.rotation @ other.translation + self.translation
        age = max(self.age, other.age) + 1
        if age >= REORTHONORMALIZE_EVERY:
            R = _polar_rotation(R)
            age = 0
        return Pose._trusted(R, t, age)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T.copy()
        return Pose._trusted(Rt, -(Rt @ self.translation), self.age)

    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    @staticmethod
    def from_matrix(m) -> "Pose":
        m = as_matrix(m, rows=4, cols=4, name="pose matrix")
        return Pose(rotation=m[:3, :3], translation=m[:3, 3])

    def to_row(self) -> np.ndarray:
        """12 numbers: row-major rotation followed by the translation."""
        return np.concatenate([self.rotation.reshape(-1), self.translation])

    @staticmethod
    def from_row(row) -> "Pose":
        row = as_vector(row, size=12, name="pose row")
        return Pose(rotation=row[:9].reshape(3, 3), translation=row[9:])


def exp(xi) -> Pose:
    """SE(3) exponential of a twist (rho, phi)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (6,):
        xi = as_vector(xi, size=6, name="twist")
    rho, phi = xi[:3], xi[3:]
    return Pose._trusted(so3_exp(phi), _so3_left_jacobian(phi) @ rho)


def log(T: Pose) -> np.ndarray:
    """SE(3) logarithm; inverse of ``exp`` away from angle pi."""
    phi = so3_log(T.rotation)
    rho = _so3_left_jacobian_inv(phi) @ T.translation
    return np.concatenate([rho, phi])


def adjoint(T: Pose) -> np.ndarray:
    """6x6 adjoint: Ad(T) xi = Log(T Exp(xi) T^-1) to first order."""
    out = np.zeros((6, 6))
    out[:3, :3] = T.rotation
    out[:3, 3:] = skew(T.translation) @ T.rotation
    out[3:, 3:] = T.rotation
    return out


def _translation_jacobian_block(rho: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Upper-right block coupling translation into the SE(3) left Jacobian."""
    angle = math.sqrt(float(phi @ phi))
    P = skew(rho)
    K = skew(phi)
    if angle < SMALL_ANGLE:
        a2 = angle * angle
        c1 = 1.0 / 6.0 - a2 / 120.0
        c2 = 1.0 / 24.0 - a2 / 720.0
        c3 = 1.0 / 120.0 - a2 / 2520.0
    else:
        s, c = math.sin(angle), math.cos(angle)
        c1 = (angle - s) / angle ** 3
        c2 = (angle * angle + 2.0 * c - 2.0) / (2.0 * angle ** 4)
        c3 = (2.0 * angle - 3.0 * s + angle * c) / (2.0 * angle ** 5)
    KP = K @ P
    PK = P @ K
    KPK = KP @ K
    return (
        0.5 * P
        + c1 * (KP + PK + KPK)
        + c2 * (K @ KP + PK @ K - 3.0 * KPK)
        + c3 * (KPK @ K + K @ KPK)
    )


def left_jacobian(xi) -> np.ndarray:
    """SE(3) left Jacobian J_l of a twist, in (rho, phi) block order."""
    xi = as_vector(xi, size=6, name="twist")
    rho, phi = xi[:3], xi[3:]
    J = _so3_left_jacobian(phi)
    out = np.zeros((6, 6))
    out[:3, :3] = J
    out[:3, 3:] = _translation_jacobian_block(rho, phi)
    out[3:, 3:] = J
    return out


def left_jacobian_inv(eta) -> np.ndarray:
    """Closed-form inverse of the SE(3) left Jacobian; angle must stay below pi."""
    eta = as_vector(eta, size=6, name="twist")
    rho, phi = eta[:3], eta[3:]
    angle = math.sqrt(float(phi @ phi))
    if angle >= math.pi - _ANGLE_MARGIN:
        raise NearPiRotation(f"rotation angle {angle:.12f} too close to pi")
    Jinv = _so3_left_jacobian_inv(phi)
    Q = _translation_jacobian_block(rho, phi)
    out = np.zeros((6, 6))
    out[:3, :3] = Jinv
    out[:3, 3:] = -Jinv @ Q @ Jinv
    out[3:, 3:] = Jinv
    return out


def boxplus(T: Pose, xi) -> Pose:
    """T * Exp(xi)."""
    return T.compose(exp(xi))


def boxminus(T1: Pose, T2: Pose) -> np.ndarray:
    """Log(T1^-1 * T2): where T2 sits in the tangent space at T1."""
    R = T1.rotation.T @ T2.rotation
    t = T1.rotation.T @ (T2.translation - T1.translation)
    phi = so3_log(R)
    rho = _so3_left_jacobian_inv(phi) @ t
    return np.concatenate([rho, phi])
