"""Newton iterated Kalman smoothing for nonlinear additive-Gaussian state-space models."""

from .autodiff import derivatives, fd_check, hessian_tensor, jacobian, tensor_dot
from .batch import DenseSystem, assemble_dense, batch_newton_step
from .core import (
    GaussianBelief,
    MeasurementSeq,
    NonlinearSSM,
    Trajectory,
    make_model,
    traj_diff_norm,
)
from .errors import (
    CovarianceNotPD,
    DimensionMismatch,
    HessianNotPD,
    IllPosedBearing,
    NonFiniteDerivative,
    NotPositiveDefinite,
    PriorNotPD,
    RegularizationExhausted,
    UnsupportedPrimitive,
)
from .linearize import AffineAugmentedSSM, build_modified_model, expand_observation, expand_transition
from .models import CoordinatedTurnModel, coordinated_turn, linear_gaussian, prior_rollout, simulate
from .objective import CostBreakdown, eval_cost, eval_quadratic_cost
from .smoother import SmootherPass, newton_iks_iteration
from .strategies import (
    LineSearchConfig,
    RunReport,
    TrustRegionConfig,
    ls_batch,
    ls_newton_iks,
    tr_batch,
    tr_newton_iks,
)

__version__ = "0.1.0"
