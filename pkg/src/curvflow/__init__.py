"""Numerics for contraction of convex hypersurfaces by nonhomogeneous curvature speeds."""

__version__ = "0.1.0"

from .errors import (
    ConeViolation,
    ConfigInvalid,
    ConvexityLost,
    CurvFlowError,
    DomainError,
    NotAchievable,
    StepTooLarge,
    StiffFailure,
    Unclassified,
)
from .phi import PhiFunction, PhiKind, check_conditions_phi, critical_log_power, eval_phi, taylor_gap
from .symfunc import (
    ConeSampler,
    CurvatureVector,
    SpeedFunction,
    SpeedKind,
    check_conditions_F,
    classify_convexity,
    derivatives,
    evaluate,
)
from .pinch import (
    cone_constants,
    g_umbilic_contraction,
    pinching_bound,
    pinching_table,
    random_second_fundamental,
    verify_curvest,
    verify_fconvprops,
    weakest_pinching,
)
from .sphere_ode import closed_form_extinction, closed_form_time, self_similar_residual, solve_psi
from .flow_sim import FlowConfig, SupportProfile, run, self_similarity_report, sphere, spheroid
