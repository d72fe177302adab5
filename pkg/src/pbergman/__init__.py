"""Numerical p-Bergman theory on Reinhardt model domains.

Computes point minimizers, kernels (on and off the diagonal), metrics,
and L^p metric projections by convex minimization over truncated
monomial bases, and checks the results against closed forms where those
exist (disc, polydisc, ball, a Thullen diagonal slice).
"""

from .basis import (
    Basis,
    PolyFun,
    check_exponent,
    evaluate,
    lp_norm,
    monomial_basis,
    sample_at_nodes,
    set_fft_workers,
)
from .closed_forms import (
    BallAutomorphism,
    ball_automorphism_apply,
    ball_kernel,
    caratheodory_reference,
    polydisc_kernel,
    thullen_k2_series,
    thullen_k2_slice,
    thullen_zero,
)
from .domains import (
    Domain,
    QuadratureRule,
    boundary_distance,
    build_quadrature,
    contains,
    default_orders,
    make_domain,
    volume,
)
from .errors import (
    DomainError,
    ParameterError,
    PBergmanError,
    UnsupportedExponentError,
)
from .lab import (
    CheckResult,
    MinimizerCache,
    ScanTable,
    boundary_ratio_scan,
    check_basic_identity,
    check_elementary_inequality,
    check_holder_offdiag,
    check_levi_bounds,
    check_power_relation,
    check_product_rule,
    check_projection_nonlinearity,
    check_transformation_rules,
    check_triangle,
    holder_modulus_probe,
    kernel_pair_gap,
    levi_estimate,
    p_scan,
    reproducing_residual,
    sample_interior_points,
)
from .solver import (
    MetricResult,
    OffDiagonalResult,
    ProjectionResult,
    SolveReport,
    default_degree,
    kernel_diag,
    kkt_residual,
    offdiagonal,
    project_lp,
    solve_high_order,
    solve_metric,
    solve_point_minimizer,
)
from .suites import SUITE_NAMES, SuiteRecord, run_suite

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "PolyFun",
    "check_exponent",
    "evaluate",
    "lp_norm",
    "monomial_basis",
    "sample_at_nodes",
    "set_fft_workers",
    "BallAutomorphism",
    "ball_automorphism_apply",
    "ball_kernel",
    "caratheodory_reference",
    "polydisc_kernel",
    "thullen_k2_series",
    "thullen_k2_slice",
    "thullen_zero",
    "Domain",
    "QuadratureRule",
    "boundary_distance",
    "build_quadrature",
    "contains",
    "default_orders",
    "make_domain",
    "volume",
    "DomainError",
    "ParameterError",
    "PBergmanError",
    "UnsupportedExponentError",
    "CheckResult",
    "MinimizerCache",
    "ScanTable",
    "boundary_ratio_scan",
    "check_basic_identity",
    "check_elementary_inequality",
    "check_holder_offdiag",
    "check_levi_bounds",
    "check_power_relation",
    "check_product_rule",
    "check_projection_nonlinearity",
    "check_transformation_rules",
    "check_triangle",
    "holder_modulus_probe",
    "kernel_pair_gap",
    "levi_estimate",
    "p_scan",
    "reproducing_residual",
    "sample_interior_points",
    "MetricResult",
    "OffDiagonalResult",
    "ProjectionResult",
    "SolveReport",
    "default_degree",
    "kernel_diag",
    "kkt_residual",
    "offdiagonal",
    "project_lp",
    "solve_high_order",
    "solve_metric",
    "solve_point_minimizer",
    "SUITE_NAMES",
    "SuiteRecord",
    "run_suite",
    "__version__",
]
