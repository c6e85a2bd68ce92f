"""Estimation and verification tools for measures of polars of random convex sets."""

from .geom import (
    BallBody,
    DirectionGrid,
    GaugeOracle,
    GeometryError,
    HPolytopeBody,
    LqBall,
    MatrixImageBody,
    UnboundedBody,
    dual_exponent,
    polar_membership,
    support_values,
    unit_ball_volume,
)
from .measure import (
    GaussianLike,
    LebesgueRestricted,
    MeasureError,
    PowerKernel,
    RadialStepDensity,
    RadialStepFn,
    UniformBodyDensity,
    dn_radius,
    rearrange_density,
)
from .rng import RngStream
from .volume import (
    Estimate,
    exact_polar_volume_crosspoly,
    halfspace_volume,
    layer_cake_measure,
    mc_polar_measure,
)
from .analysis import (
    ProfileReport,
    ShadowConfig,
    Step1D,
    ball_bobkov_gauge,
    brunn_profile,
    busemann_gauge,
    convexity_even_check,
    milman_pajor_gauge,
    rbll_check_1d,
    rearrange_step1d,
    shadow_profile,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    centroid_polar_experiment,
    convergence_experiment,
    newsan_experiment,
    santalo_expectation_experiment,
    stochastic_dominance_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BallBody",
    "ConfigError",
    "DirectionGrid",
    "Estimate",
    "ExperimentConfig",
    "ExperimentReport",
    "GaugeOracle",
    "GaussianLike",
    "GeometryError",
    "HPolytopeBody",
    "LebesgueRestricted",
    "LqBall",
    "MatrixImageBody",
    "MeasureError",
    "PowerKernel",
    "ProfileReport",
    "RadialStepDensity",
    "RadialStepFn",
    "RngStream",
    "ShadowConfig",
    "Step1D",
    "UnboundedBody",
    "UniformBodyDensity",
    "ball_bobkov_gauge",
    "brunn_profile",
    "busemann_gauge",
    "centroid_polar_experiment",
    "convergence_experiment",
    "convexity_even_check",
    "dn_radius",
    "dual_exponent",
    "exact_polar_volume_crosspoly",
    "halfspace_volume",
    "layer_cake_measure",
    "mc_polar_measure",
    "milman_pajor_gauge",
    "newsan_experiment",
    "polar_membership",
    "rbll_check_1d",
    "rearrange_density",
    "rearrange_step1d",
    "santalo_expectation_experiment",
    "shadow_profile",
    "stochastic_dominance_experiment",
    "support_values",
    "unit_ball_volume",
]
