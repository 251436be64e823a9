"""Reactive 2D navigation under non-parametric uncertainty.

Distribution-matching model-predictive control over probabilistic velocity
obstacles: RKHS/MMD matching as the primary method, a GMM + KL-divergence
baseline, and two Gaussian-surrogate baselines, validated by Monte-Carlo
collision statistics in dynamic-obstacle scenarios.
"""

from .desired import DesiredDistribution, build_desired, build_desired_multi
from .embedding import (
    EmbeddingWeights,
    KernelSpec,
    consistency_error,
    mmd_squared,
    poly_kernel,
    reduced_set_weights,
)
from .errors import (
    ConfigError,
    DegenerateVelocityWarning,
    DesiredDistributionInfeasible,
    NoFeasibleControl,
    NumericalError,
    ShapeError,
    TailWarning,
)
from .gmm import GmmModel, fit_gmm, kl_divergence
from .planner import (
    ControlDecision,
    ControlGridSpec,
    PlannerConfig,
    ev_gauss_feasible,
    goal_tracking_target,
    linearized_gaussian_feasible,
    select_control,
    tracking_control_cost,
)
from .uncertainty import (
    ControlInput,
    MixtureComponent,
    NoiseModel,
    RobotState,
    SampleSet,
    concat_w,
    propagate,
    sample_noise,
    step_matrices,
)
from .vo import (
    ConstraintSampleSet,
    ObstacleGeometry,
    VOCoefficients,
    pvo_samples,
    vo_coefficients,
    vo_of_control,
    vo_value,
)

__version__ = "0.1.0"
