"""Gauss curvature flows and variational solvers for Gaussian Minkowski problems."""

from .errors import (
    ConvexityLossError,
    DegenerateBodyError,
    FieldMismatchError,
    GaussMinkError,
    InvalidBodyError,
    InvalidGridError,
    RejectedInputError,
    SolverFailureError,
)
from .sphere import (
    ScalarField,
    SphericalGrid,
    constant_field,
    covariant_hessian,
    field_from_csv,
    field_to_csv,
    grad,
    integrate,
    make_circle_grid,
    make_latlon_grid,
    sample,
)
from .body import (
    BodyGeometry,
    RadialBody,
    ball_support,
    check_uniform_convexity,
    derive_geometry,
    dual_identity_residual,
    ellipse_support,
    perturbed_ball_support,
    polar_dual,
    radial_curvature,
    support_to_radial,
    wulff_polytope,
    wulff_support,
)
from .measure import (
    FunctionalRecord,
    GaussDensityContext,
    MeasureField,
    functionals,
    gaussian_volume,
    gaussian_volume_mc,
    lp_surface_density,
    polygon_gaussian_volume,
    radial_gauss_integral,
    support_membership,
    variational_check,
)
from .flow import (
    FlowConfig,
    FlowDiagnostics,
    FlowState,
    decay_monitor,
    dual_flow_crosscheck,
    monotonicity_audit,
    run,
    step,
    theta_constant,
)
from .logmink import (
    DiscreteMeasure,
    SymmetricSlabBody,
    facet_gaussian_cone_measure,
    slab_gaussian_volume,
    solve_log_minkowski,
    subspace_concentration_check,
)

__version__ = "0.1.0"
