"""Relative-pose trajectories and the cost of aligning two of them at a pose pair.

A trajectory is a head pose plus a chain of relative poses; the k-th global
pose is the left-to-right product of the head and the first k-1 relative
poses. Pinning pose l of trajectory A to pose r of trajectory B is the hard
constraint Log(T_A,l * T_B,r^-1) = 0 over the stacked pose variables

    [A-head, A-edges 1..N_A, B-head, B-edges 1..N_B]

each perturbed on the right by its own tangent vector. Before the
constraint arrives, the optimal state is the measurements themselves with
zero cost and block-diagonal covariance, so the cost of enforcing the pin
is available in closed form:

    delta_f = eta^T [A2 Sigma A2^T]^-1 eta,    eta = Log(T_A,l * T_B,r^-1)

with the constraint Jacobian assembled from closed-form blocks:

    block for A-variable i (i = 1..l):  -J_l(eta)^-1 Ad(T_A,i)
    block for B-variable j (j = 1..r):  +J_l(eta)^-1 Ad(T_A,l T_B,r^-1 T_B,j)

where T_A,i / T_B,j are the chained measurement poses. All other blocks are
zero: variables past the pinned indices do not enter the constraint. These
blocks are validated against central finite differences by the test suite.
``solve_alignment`` computes the ground-truth cost by fully optimizing the
constrained problem.

Trajectory CSV files have one integer header line (the number of relative
poses N), then N+1 pose lines of 12 numbers (row-major rotation, then
translation; head first), then N+1 covariance lines of 36 numbers
(row-major 6x6; head covariance first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .leastnorm import _weighted_residual_square
from .liegroup import Pose, adjoint, boxminus, boxplus, exp, left_jacobian_inv, log
from .linalg import as_matrix, solve_spd
from .nlpredict import Constraint, Manifold, ManifoldProblem, NLPhaseSolution, solve_nl

DEFAULT_TRANS_NOISE = 0.1  # meters, per axis
DEFAULT_ROT_NOISE = 0.01  # radians, per axis
# Random headings are drawn uniform in (-range, range) per step. The default
# is calibrated so a 20-pose sweep's worst prediction error lands around ten
# percent (typically); wider turns make far-pair alignments so twisted that
# the linearized prediction degrades well beyond that regime.
DEFAULT_HEADING_RANGE = math.pi / 8

# Noise standard deviations are floored here when building covariance
# blocks, so zero-noise simulations still carry SPD covariances.
_STD_FLOOR = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Head pose, N relative poses, and N+1 SPD 6x6 covariances (head first)."""

    head: Pose
    rel_poses: tuple[Pose, ...]
    edge_covs: tuple[np.ndarray, ...]

    def __post_init__(self):
        rel = tuple(self.rel_poses)
        covs = []
        if len(self.edge_covs) != len(rel) + 1:
            raise ValueError(
                f"expected {len(rel) + 1} covariance blocks, got {len(self.edge_covs)}"
            )
        for c in self.edge_covs:
            c = as_matrix(c, rows=6, cols=6, name="edge covariance")
            if np.abs(c - c.T).max() > 1e-12 * max(1.0, np.abs(c).max()):
                raise ValueError("edge covariance is not symmetric")
            try:
                scipy.linalg.cho_factor(c, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise ValueError("edge covariance is not SPD") from exc
            c.setflags(write=False)
            covs.append(c)
        object.__setattr__(self, "rel_poses", rel)
        object.__setattr__(self, "edge_covs", tuple(covs))

    @property
    def n_rel(self) -> int:
        return len(self.rel_poses)

    @property
    def n_poses(self) -> int:
        return len(self.rel_poses) + 1

    def elements(self) -> tuple[Pose, ...]:
        """Head followed by the relative poses: the optimization variables."""
        return (self.head,) + self.rel_poses


@dataclass(frozen=True)
class AlignmentPair:
    """1-based pose indices: pose l of trajectory A is pinned to pose r of B."""

    l: int
    r: int

    def __post_init__(self):
        if self.l < 1 or self.r < 1:
            raise ValueError("pose indices are 1-based")


@dataclass(frozen=True)
class PredictionReport:
    """Predicted cost, oracle cost (optional), relative error, and wall-clock times."""

    delta_f: float
    f_real: float | None
    rel_error: float | None
    t_predict: float
    t_solve: float | None

    REL_ERROR_FLOOR = 1e-12

    @staticmethod
    def build(delta_f, t_predict, f_real=None, t_solve=None) -> "PredictionReport":
        rel = None
        if f_real is not None:
            rel = abs(delta_f - f_real) / max(f_real, PredictionReport.REL_ERROR_FLOOR)
        return PredictionReport(
            delta_f=float(delta_f),
            f_real=None if f_real is None else float(f_real),
            rel_error=rel,
            t_predict=float(t_predict),
            t_solve=None if t_solve is None else float(t_solve),
        )


def chain_pose(t: Trajectory, k: int) -> Pose:
    """Global pose k (1-based): head composed with the first k-1 relative poses."""
    if k < 1 or k > t.n_poses:
        raise IndexError(f"pose index {k} outside 1..{t.n_poses}")
    out = t.head
    for rel in t.rel_poses[: k - 1]:
        out = out.compose(rel)
    return out


def chain_all(t: Trajectory) -> list[Pose]:
    """All global poses 1..N+1 by incremental chaining."""
    out = [t.head]
    for rel in t.rel_poses:
        out.append(out[-1].compose(rel))
    return out


def _heading_step(angle: float, step: float) -> Pose:
    """Rotate about z by ``angle``, then move ``step`` meters forward."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Pose(rotation=rot, translation=rot @ np.array([step, 0.0, 0.0]))


def simulate_pair(
    n_poses: int,
    trans_step: float = 1.0,
    rot_noise_std: float = DEFAULT_ROT_NOISE,
    trans_noise_std: float = DEFAULT_TRANS_NOISE,
    seed: int = 0,
    heading_range: float = DEFAULT_HEADING_RANGE,
):
    """Simulate two random trajectories that intersect at their middle poses.

    Each trajectory turns by a uniform random heading and then advances
    ``trans_step`` meters, ``n_poses - 1`` times. Trajectory B is rigidly
    moved so that its middle pose coincides with A's middle pose, then every
    pose element receives right-multiplied tangent noise Exp(eps) with eps
    drawn from N(0, diag(trans_noise_std^2 I3, rot_noise_std^2 I3)). The
    same diagonal is stored as the per-element covariance.

    Returns (noisy A, noisy B, (clean A, clean B)); deterministic per seed.
    """
    if n_poses < 2:
        raise ValueError("need at least 2 poses")
    rng = np.random.default_rng(seed)

    def clean_elements():
        angles = rng.uniform(-heading_range, heading_range, n_poses - 1)
        return Pose.identity(), tuple(_heading_step(a, trans_step) for a in angles)

    head_a, rels_a = clean_elements()
    head_b, rels_b = clean_elements()

    # Rigidly carry B so the chained middle poses coincide before noise.
    mid = math.ceil(n_poses / 2)
    cov = np.diag(
        [max(trans_noise_std, _STD_FLOOR) ** 2] * 3
        + [max(rot_noise_std, _STD_FLOOR) ** 2] * 3
    )
    covs = (cov,) * n_poses
    clean_a = Trajectory(head=head_a, rel_poses=rels_a, edge_covs=covs)
    clean_b = Trajectory(head=head_b, rel_poses=rels_b, edge_covs=covs)
    mover = chain_pose(clean_a, mid).compose(chain_pose(clean_b, mid).inverse())
    clean_b = Trajectory(head=mover.compose(head_b), rel_poses=rels_b, edge_covs=covs)

    std = np.array([trans_noise_std] * 3 + [rot_noise_std] * 3)

    def perturb(traj: Trajectory) -> Trajectory:
        noisy = [boxplus(el, rng.standard_normal(6) * std) for el in traj.elements()]
        return Trajectory(head=noisy[0], rel_poses=tuple(noisy[1:]), edge_covs=traj.edge_covs)

    return perturb(clean_a), perturb(clean_b), (clean_a, clean_b)


def _alignment_blocks(chains_a: list[Pose], chains_b: list[Pose], l: int, r: int):
    """eta plus the per-variable 6x6 constraint blocks for a pinned pair."""
    G = chains_a[l - 1].compose(chains_b[r - 1].inverse())
    eta = log(G)
    Jinv = left_jacobian_inv(eta)
    blocks_a = [-Jinv @ adjoint(chains_a[i]) for i in range(l)]
    blocks_b = [Jinv @ adjoint(G.compose(chains_b[j])) for j in range(r)]
    return eta, blocks_a, blocks_b


def _check_pair(tA: Trajectory, tB: Trajectory, pair: AlignmentPair) -> None:
    if pair.l > tA.n_poses or pair.r > tB.n_poses:
        raise IndexError(
            f"pair ({pair.l}, {pair.r}) outside {tA.n_poses} x {tB.n_poses} poses"
        )


def alignment_jacobian(tA: Trajectory, tB: Trajectory, pair: AlignmentPair):
    """Constraint matrix A2 (6 rows over all tangent variables) and eta.

    Columns are grouped 6 per variable in the stacked order
    [A-head, A-edges, B-head, B-edges]; variables beyond the pinned
    indices contribute zero columns.
    """
    _check_pair(tA, tB, pair)
    chains_a = chain_all(tA)
    chains_b = chain_all(tB)
    eta, blocks_a, blocks_b = _alignment_blocks(chains_a, chains_b, pair.l, pair.r)
    n_vars = tA.n_poses + tB.n_poses
    A2 = np.zeros((6, 6 * n_vars))
    for i, block in enumerate(blocks_a):
        A2[:, 6 * i : 6 * i + 6] = block
    offset = tA.n_poses
    for j, block in enumerate(blocks_b):
        A2[:, 6 * (offset + j) : 6 * (offset + j) + 6] = block
    return A2, eta


def predict_alignment_cost(tA: Trajectory, tB: Trajectory, pair: AlignmentPair) -> float:
    """Closed-form cost of pinning the pair, from measurements alone.

    The unconstrained optimum is the measurement state with zero cost and
    block-diagonal covariance, so the full cost equals the predicted
    increase eta^T [A2 Sigma A2^T]^-1 eta. Accumulates the 6x6 normal
    matrix block-wise; no full Jacobian is formed.
    """
    _check_pair(tA, tB, pair)
    chains_a = chain_all(tA)
    chains_b = chain_all(tB)
    eta, blocks_a, blocks_b = _alignment_blocks(chains_a, chains_b, pair.l, pair.r)
    W = np.zeros((6, 6))
    for block, cov in zip(blocks_a, tA.edge_covs):
        W += block @ cov @ block.T
    for block, cov in zip(blocks_b, tB.edge_covs):
        W += block @ cov @ block.T
    W = 0.5 * (W + W.T)
    return _weighted_residual_square(eta, W)


class PoseProduct(Manifold):
    """Product of SE(3) elements; states are tuples of poses."""

    def __init__(self, n_elements: int):
        self.n_elements = int(n_elements)
        self.dim = 6 * self.n_elements

    def boxplus(self, x, xi):
        xi = np.asarray(xi, dtype=float)
        return tuple(
            boxplus(el, xi[6 * i : 6 * i + 6]) for i, el in enumerate(x)
        )

    def boxminus(self, x, y):
        return np.concatenate([boxminus(a, b) for a, b in zip(x, y)])

    def diff_jacobian(self, x, ref):
        return self.residual_and_jacobian(x, ref)[1]

    def residual_and_jacobian(self, x, ref):
        # Per block: eta_i = Log(x_i^-1 ref_i) and d/dxi = -J_l(eta_i)^-1.
        res = np.empty(self.dim)
        out = np.zeros((self.dim, self.dim))
        for i, (a, b) in enumerate(zip(x, ref)):
            eta = boxminus(a, b)
            res[6 * i : 6 * i + 6] = eta
            out[6 * i : 6 * i + 6, 6 * i : 6 * i + 6] = -left_jacobian_inv(eta)
        return res, out


def stacked_covariance(tA: Trajectory, tB: Trajectory) -> np.ndarray:
    """Block-diagonal tangent covariance in the stacked variable order."""
    return scipy.linalg.block_diag(*(tA.edge_covs + tB.edge_covs))


def _prefix_chain(state, start: int, count: int) -> list[Pose]:
    out = [state[start]]
    for i in range(1, count):
        out.append(out[-1].compose(state[start + i]))
    return out


def alignment_constraint(tA: Trajectory, tB: Trajectory, pair: AlignmentPair) -> Constraint:
    """The pinning constraint over stacked states, with its analytic Jacobian."""
    _check_pair(tA, tB, pair)
    n_a = tA.n_poses
    n_vars = n_a + tB.n_poses
    l, r = pair.l, pair.r

    def fn(state):
        ca = _prefix_chain(state, 0, l)[-1]
        cb = _prefix_chain(state, n_a, r)[-1]
        return log(ca.compose(cb.inverse()))

    def jac(state):
        chains_a = _prefix_chain(state, 0, l)
        chains_b = _prefix_chain(state, n_a, r)
        _, blocks_a, blocks_b = _alignment_blocks(chains_a, chains_b, l, r)
        J = np.zeros((6, 6 * n_vars))
        for i, block in enumerate(blocks_a):
            J[:, 6 * i : 6 * i + 6] = -block
        for j, block in enumerate(blocks_b):
            J[:, 6 * (n_a + j) : 6 * (n_a + j) + 6] = -block
        return J

    return Constraint(fn=fn, jac=jac)


def alignment_problem(tA: Trajectory, tB: Trajectory, pair: AlignmentPair) -> ManifoldProblem:
    """The full constrained problem over both trajectories' pose variables."""
    state = tA.elements() + tB.elements()
    return ManifoldProblem(
        manifold=PoseProduct(len(state)),
        x_tilde=state,
        Sigma=stacked_covariance(tA, tB),
        constraints=(alignment_constraint(tA, tB, pair),),
    )


def solve_alignment(tA: Trajectory, tB: Trajectory, pair: AlignmentPair,
                    max_iterations: int = 100):
    """Ground-truth alignment cost by full optimization.

    Returns (f_real, (bent A, bent B)): the optimal value and the
    trajectories rebuilt from the optimized pose variables. Long, strongly
    bent instances converge only linearly; ``max_iterations`` caps the work
    (NoConvergence carries the best iterate).
    """
    problem = alignment_problem(tA, tB, pair)
    sol: NLPhaseSolution = solve_nl(
        problem, init=problem.x_tilde, max_iterations=max_iterations
    )
    state = sol.x_star
    n_a = tA.n_poses
    bent_a = Trajectory(head=state[0], rel_poses=tuple(state[1:n_a]), edge_covs=tA.edge_covs)
    bent_b = Trajectory(
        head=state[n_a], rel_poses=tuple(state[n_a + 1 :]), edge_covs=tB.edge_covs
    )
    return sol.f_star, (bent_a, bent_b)


def save_trajectory(path, t: Trajectory) -> None:
    """Write the documented CSV layout: N line, pose lines, covariance lines."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{t.n_rel}\n")
        for el in t.elements():
            fh.write(",".join(format(v, ".17g") for v in el.to_row()) + "\n")
        for cov in t.edge_covs:
            fh.write(",".join(format(v, ".17g") for v in cov.reshape(-1)) + "\n")


def load_trajectory(path) -> Trajectory:
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    n_rel = int(lines[0])
    expected = 1 + 2 * (n_rel + 1)
    if len(lines) != expected:
        raise ValueError(f"expected {expected} lines for {n_rel} relative poses")
    poses = [
        Pose.from_row(np.fromstring(line, sep=",")) for line in lines[1 : n_rel + 2]
    ]
    covs = [
        np.fromstring(line, sep=",").reshape(6, 6) for line in lines[n_rel + 2 :]
    ]
    return Trajectory(head=poses[0], rel_poses=tuple(poses[1:]), edge_covs=tuple(covs))
