"""Numerical toolkit for Wasserstein distributionally robust optimization.

Worst-case risk evaluation and extremal distributions over Wasserstein
balls, Gelbrich moment hulls, robust shrinkage and MMSE estimation,
robust linear learning, and radius calibration, with exact solvers and
verifiable certificates throughout.
"""

__version__ = "0.1.0"

from .calibrate import (
    MomentTailModel,
    TailModel,
    cv_radius,
    eta_schedule,
    radius_empirical,
    radius_moments,
)
from .convex_analysis import (
    ConjugableFunction,
    NormSpec,
    SetSpec,
    conjugate_eval,
    dual_norm_eval,
    norm_eval,
    norm_subgradient,
    support_function_eval,
)
from .empirical_risk import (
    AsymptoticFamily,
    BallSpec,
    EscapingAtom,
    ExtremalReport,
    PiecewiseAffineLoss,
    QuadraticLoss,
    expected_loss,
    extremal_pwa,
    extremal_quadratic,
    robust_lower_bound,
    wc_risk_pwa,
    wc_risk_quadratic,
)
from .errors import (
    DimensionMismatch,
    EmptySample,
    InfeasibleSet,
    InsufficientData,
    MaxIterExceeded,
    NoBracket,
    NotPSD,
    NotSymmetric,
    NumericalFailure,
    PairingMismatch,
    SingularBlock,
    ToolkitError,
    Unbounded,
    UnsupportedCase,
    UnsupportedCombination,
    UnsupportedLoss,
    UnsupportedSupport,
    UsageError,
)
from .learn import (
    RobustLinearClassifier,
    RobustLinearRegressor,
    TrainedModel,
    UnivariateLoss,
    dro_objective_crosscheck,
    dro_train_classifier,
    dro_train_regressor,
)
from .mmse import (
    AffineEstimator,
    JointMoments,
    RobustMMSE,
    fw_direction,
    fw_solve,
    mmse_gradient,
    mmse_objective,
)
from .moment_risk import (
    EllipticalSpec,
    GelbrichBall,
    GelbrichRiskResult,
    gelbrich_hull_contains,
    gelbrich_risk_quadratic,
    projection_check,
    support_V,
    wc_risk_elliptical_quadratic,
)
from .numerics import DEFAULT_TOL, Tolerance
from .shrinkage import (
    ShrinkageResult,
    WassersteinShrinkage,
    sample_moments,
    shrinkage_from_samples,
    wasserstein_shrinkage,
)
from .transport import (
    DiscreteDistribution,
    MomentPair,
    gelbrich_distance,
    kr_verify,
    moments,
    wasserstein_p,
)

__all__ = [
    "__version__",
    "Tolerance",
    "DEFAULT_TOL",
    "NormSpec",
    "SetSpec",
    "ConjugableFunction",
    "norm_eval",
    "dual_norm_eval",
    "norm_subgradient",
    "support_function_eval",
    "conjugate_eval",
    "DiscreteDistribution",
    "MomentPair",
    "wasserstein_p",
    "kr_verify",
    "gelbrich_distance",
    "moments",
    "BallSpec",
    "PiecewiseAffineLoss",
    "QuadraticLoss",
    "expected_loss",
    "wc_risk_pwa",
    "wc_risk_quadratic",
    "robust_lower_bound",
    "extremal_pwa",
    "extremal_quadratic",
    "EscapingAtom",
    "AsymptoticFamily",
    "ExtremalReport",
    "GelbrichBall",
    "EllipticalSpec",
    "GelbrichRiskResult",
    "gelbrich_hull_contains",
    "projection_check",
    "gelbrich_risk_quadratic",
    "support_V",
    "wc_risk_elliptical_quadratic",
    "ShrinkageResult",
    "sample_moments",
    "wasserstein_shrinkage",
    "shrinkage_from_samples",
    "WassersteinShrinkage",
    "JointMoments",
    "AffineEstimator",
    "mmse_objective",
    "mmse_gradient",
    "fw_direction",
    "fw_solve",
    "RobustMMSE",
    "UnivariateLoss",
    "TrainedModel",
    "dro_train_classifier",
    "dro_train_regressor",
    "dro_objective_crosscheck",
    "RobustLinearClassifier",
    "RobustLinearRegressor",
    "TailModel",
    "MomentTailModel",
    "radius_empirical",
    "radius_moments",
    "eta_schedule",
    "cv_radius",
    "ToolkitError",
    "DimensionMismatch",
    "NotSymmetric",
    "NotPSD",
    "NoBracket",
    "MaxIterExceeded",
    "Unbounded",
    "NumericalFailure",
    "InfeasibleSet",
    "UnsupportedCombination",
    "UnsupportedSupport",
    "UnsupportedLoss",
    "UnsupportedCase",
    "PairingMismatch",
    "InsufficientData",
    "SingularBlock",
    "EmptySample",
    "UsageError",
]
