"""Closed-form prediction of optimal-value changes under new equality constraints.

The linear core: solve a least-norm or weighted least-distance problem once,
keep its solution and covariance, and obtain the optimal value of the same
problem with additional constraints from a small quadratic form instead of
re-solving. The same quadratic form, fed with linearizations, approximates
the change for nonlinear equality-constrained problems on manifolds; the
flagship application prices the cost of pinning two SE(3) trajectories
together at an arbitrary pose pair.
"""

from .leastdist import (
    LDPhaseSolution,
    LeastDistanceProblem,
    SingularH,
    predict_delta_f_ld,
    solve_ld,
    to_least_norm,
)
from .leastnorm import (
    LeastNormProblem,
    PhaseSolution,
    RankDeficient,
    SingularW,
    predict_delta_f,
    solve_least_norm,
    solve_stacked,
)
from .liegroup import (
    NearPiRotation,
    Pose,
    adjoint,
    boxminus,
    boxplus,
    exp,
    left_jacobian,
    left_jacobian_inv,
    log,
)
from .linalg import (
    DimensionMismatch,
    NotSPD,
    SingularBlock,
    numerical_rank,
    schur_decompose,
    solve_spd,
    symmetric_sqrt,
)
from .nlpredict import (
    Constraint,
    EvaluationFailure,
    Manifold,
    ManifoldProblem,
    NLPhaseSolution,
    NoConvergence,
    VectorSpace,
    linearize_constraint,
    predict_delta_f_nl,
    solve_nl,
)
from .trajectory import (
    AlignmentPair,
    PredictionReport,
    Trajectory,
    alignment_jacobian,
    chain_pose,
    load_trajectory,
    predict_alignment_cost,
    save_trajectory,
    simulate_pair,
    solve_alignment,
)

__version__ = "0.1.0"
