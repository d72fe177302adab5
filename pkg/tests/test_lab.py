"""Identity, inequality, and scan checks on top of the solver."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbergman import DomainError, ParameterError
from pbergman import lab
from pbergman.basis import PolyFun, monomial_basis
from pbergman.closed_forms import BallAutomorphism
from pbergman.domains import build_quadrature, make_domain
from pbergman.solver import solve_point_minimizer


@pytest.fixture(scope="module")
def disc_rule():
    return build_quadrature(make_domain("disc"), 24, 44)


@pytest.fixture(scope="module")
def big_disc_rule():
    return build_quadrature(make_domain("disc"), 40, 84)


@pytest.fixture(scope="module")
def ball_rule():
    return build_quadrature(make_domain("ball", 2), 12, 36)


@pytest.fixture(scope="module")
def bidisc_rule():
    return build_quadrature(make_domain("polydisc", 2), 16, 36)


@pytest.fixture(scope="module")
def thullen_rule():
    return build_quadrature(make_domain("thullen", alpha=3.0), 16, 36)


# --------------------------------------------------------------------------
# pairwise checks
# --------------------------------------------------------------------------

def test_pair_gap_vanishes_on_diagonal(disc_rule):
    gap = lab.kernel_pair_gap(disc_rule, 3.0, [0.2], [0.2], degree=10)
    assert abs(gap) < 1e-10


def test_pair_gap_positive_apart(disc_rule):
    cache = lab.MinimizerCache(disc_rule, 3.0, degree=10)
    gap = lab.kernel_pair_gap(disc_rule, 3.0, [0.2], [-0.3 + 0.25j], cache=cache)
    assert gap > 1e-3
    # the cache holds exactly the two endpoint solves
    assert len(cache._reports) == 2


def test_holder_offdiag_passes_and_is_tight_on_diagonal(disc_rule):
    cache = lab.MinimizerCache(disc_rule, 3.0, degree=10)
    far = lab.check_holder_offdiag(disc_rule, 3.0, [0.2], [-0.3 + 0.25j], cache=cache)
    assert far.passed and far.margin > 0
    diag = lab.check_holder_offdiag(disc_rule, 3.0, [0.2], [0.2], cache=cache)
    assert diag.passed and abs(diag.margin) < 1e-9


def test_holder_offdiag_p_one_branch(disc_rule):
    got = lab.check_holder_offdiag(disc_rule, 1.0, [0.2], [-0.3 + 0.25j], degree=10)
    assert got.passed
    # the conjugate factor degenerates: the bound is K_1(z) itself
    cache = lab.MinimizerCache(disc_rule, 1.0, degree=10)
    assert abs(got.rhs - cache.kernel([0.2])) < 1e-12


def test_triangle_bound(disc_rule):
    got = lab.check_triangle(disc_rule, 3.0, [0.2], [-0.3 + 0.25j], degree=10)
    assert got.passed and got.margin > 0


def test_cache_rejects_mismatched_context(disc_rule):
    cache = lab.MinimizerCache(disc_rule, 3.0, degree=10)
    with pytest.raises(ParameterError):
        lab.check_triangle(disc_rule, 2.0, [0.2], [0.1], cache=cache)


# --------------------------------------------------------------------------
# reproducing formula
# --------------------------------------------------------------------------

def test_reproducing_residual_small_in_span(disc_rule):
    basis = monomial_basis(disc_rule, 10)
    rng = np.random.default_rng(7)
    rep = solve_point_minimizer(disc_rule, 3.0, [0.3], degree=10)
    for _ in range(5):
        f = PolyFun(basis, rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size))
        assert lab.reproducing_residual(disc_rule, 3.0, [0.3], f, report=rep) < 1e-10


def test_reproducing_residual_p_two_matches_projection(disc_rule):
    basis = monomial_basis(disc_rule, 10)
    coeff = np.zeros(basis.size, dtype=complex)
    coeff[3] = 1.0
    f = PolyFun(basis, coeff)
    assert lab.reproducing_residual(disc_rule, 2.0, [0.4], f, degree=10) < 1e-12


# --------------------------------------------------------------------------
# Levi estimates
# --------------------------------------------------------------------------

def test_levi_disc_origin_both_exponents(disc_rule):
    for p in (2.0, 4.0):
        got = lab.levi_estimate(disc_rule, p, [0.0], [1.0], degree=10, angles=32)
        assert abs(got - 2.0) < 5e-3


def test_levi_disc_interior_point(disc_rule):
    got = lab.levi_estimate(disc_rule, 2.0, [0.3], [1.0], degree=10, angles=32)
    want = 2.0 / (1 - 0.09) ** 2
    assert abs(got - want) < 5e-3


def test_levi_ball_origin(ball_rule):
    got = lab.levi_estimate(ball_rule, 2.0, [0.0, 0.0], [1.0, 0.0], degree=8, angles=32)
    assert abs(got - 3.0) < 5e-3


def test_levi_rejects_circles_leaving_domain(disc_rule):
    with pytest.raises(DomainError):
        lab.levi_estimate(disc_rule, 2.0, [0.95], [1.0], degree=10)


def test_levi_rejects_bad_radii(disc_rule):
    with pytest.raises(ParameterError):
        lab.levi_estimate(disc_rule, 2.0, [0.0], [1.0], radii=())
    with pytest.raises(ParameterError):
        lab.levi_estimate(disc_rule, 2.0, [0.0], [1.0], radii=(0.0, 0.1))


def test_levi_bound_metric_floor(disc_rule):
    got = lab.check_levi_bounds(disc_rule, 4.0, [0.0], [1.0], degree=10)
    assert got.passed
    assert abs(got.lhs - math.sqrt(3.0)) < 1e-6
    assert got.note == "floor=metric"


def test_levi_bound_caratheodory_floor(disc_rule):
    got = lab.check_levi_bounds(disc_rule, 1.5, [0.3], [1.0], degree=10)
    assert got.passed
    assert abs(got.lhs - (1.0 / (1 - 0.09)) ** 2) < 1e-12
    assert got.note == "floor=caratheodory"


def test_levi_bound_needs_reference_below_two(thullen_rule):
    with pytest.raises(ParameterError):
        lab.check_levi_bounds(thullen_rule, 1.5, [0.1, 0.1], [1.0, 0.0], degree=6)


# --------------------------------------------------------------------------
# scans
# --------------------------------------------------------------------------

def test_p_scan_columns_and_flags(disc_rule):
    table = lab.p_scan(disc_rule, [0.4], [1.5, 2.0, 3.0, 4.0], w=[0.1], X=[1.0], degree=10)
    assert table.metadata["all_converged"]
    assert table.metadata["scaled_kernel_nonincreasing"]
    assert table.metadata["metric_nonincreasing"]
    # diagonal kernel on the disc does not depend on p
    kernels = table.columns["kernel"]
    assert np.max(np.abs(kernels - kernels[0])) < 1e-6
    header, rows = table.rows()
    assert header == ["p", "minimum_norm", "kernel", "scaled_kernel", "offdiag_m", "metric"]
    assert len(rows) == 4 and len(rows[0]) == 6


def test_p_scan_metric_column_matches_oracle(disc_rule):
    grid = [2.0, 4.0, 8.0, 16.0]
    table = lab.p_scan(disc_rule, [0.0], grid, X=[1.0], degree=10)
    want = np.array([((p + 2) / 2) ** (1 / p) for p in grid])
    assert np.max(np.abs(table.columns["metric"] - want)) < 1e-10


def test_p_scan_rejects_unsorted_grid(disc_rule):
    with pytest.raises(ParameterError):
        lab.p_scan(disc_rule, [0.4], [2.0, 1.5])


def test_scan_table_validates_column_lengths():
    with pytest.raises(ParameterError):
        lab.ScanTable(axis_name="x", axis=np.arange(3), columns={"y": np.arange(2)})


def test_holder_modulus_probe_ratios_stay_bounded(disc_rule):
    table = lab.holder_modulus_probe(
        disc_rule, 3.0, [0.2], [0.1], [0.08, 0.04, 0.02, 0.01], degree=10
    )
    assert table.metadata["exponent"] == 0.5
    assert table.metadata["max_ratio"] < 1.0
    with pytest.raises(DomainError):
        lab.holder_modulus_probe(disc_rule, 3.0, [0.2], [0.95], [0.2], degree=10)


def test_holder_modulus_probe_p_one_exponent(disc_rule):
    table = lab.holder_modulus_probe(disc_rule, 1.0, [0.2], [0.1], [0.04], degree=10)
    assert abs(table.metadata["exponent"] - 1.0 / 6.0) < 1e-15


# --------------------------------------------------------------------------
# boundary ratio
# --------------------------------------------------------------------------

def test_boundary_ratio_point_values():
    table = lab.boundary_ratio_scan(4.0, [0.9])
    assert abs(table.columns["ratio"][0] - math.pi ** 0.25 * 0.19**0.5) < 1e-12
    assert abs(table.columns["envelope"][0] - 0.1**0.25) < 1e-12


def test_boundary_ratio_slope_recovers_exponent():
    t = 1.0 - np.geomspace(1e-4, 0.05, 30)
    for p in (4.0, 8.0):
        table = lab.boundary_ratio_scan(p, t)
        assert abs(table.metadata["slope"] - (1.0 - 2.0 / p)) < 0.02


def test_boundary_ratio_p_two_is_flat():
    table = lab.boundary_ratio_scan(2.0, np.linspace(0.5, 0.99, 20))
    assert np.allclose(table.columns["ratio"], 1.0)


def test_boundary_ratio_validation():
    with pytest.raises(ParameterError):
        lab.boundary_ratio_scan(0.5, [0.9])
    with pytest.raises(ParameterError):
        lab.boundary_ratio_scan(4.0, [0.3])
    with pytest.raises(ParameterError):
        lab.boundary_ratio_scan(4.0, [1.0])


# --------------------------------------------------------------------------
# scalar inequalities
# --------------------------------------------------------------------------

def test_inequality_chain_worked_example():
    got = lab.check_elementary_inequality(1, 0.0, 1.0, 3.0)
    assert got.passed
    assert abs(got.rhs - 1.0) < 1e-15
    assert abs(got.lhs - 0.5) < 1e-15
    assert abs(got.margin - 0.25) < 1e-15


def test_inequality_expansion_worked_example():
    got = lab.check_elementary_inequality(3, 1.0, 1.0 + 1.0j, 4.0)
    assert got.passed
    assert abs(got.rhs - 4.0) < 1e-12
    assert abs(got.lhs - (1.0 + 4.0**-7.0)) < 1e-12


def test_inequality_branch_exponent_guards():
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(1, 1.0, 2.0, 1.5)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(2, 1.0, 2.0, 3.0)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(3, 1.0, 2.0, 2.0)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(4, 1.0, 2.0, 1.0)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(5, 1.0, 2.0, 2.0)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(5, 0.0, 2.0, 1.0)
    with pytest.raises(ParameterError):
        lab.check_elementary_inequality(6, 1.0, 2.0, 2.0)


@given(
    are=st.floats(-3.0, 3.0), aim=st.floats(-3.0, 3.0),
    bre=st.floats(-3.0, 3.0), bim=st.floats(-3.0, 3.0),
    p=st.floats(2.0, 8.0),
)
@settings(max_examples=150, deadline=None)
def test_inequality_chain_holds_randomly(are, aim, bre, bim, p):
    a = complex(are, aim)
    b = complex(bre, bim)
    assert lab.check_elementary_inequality(1, a, b, p).passed
    assert lab.check_elementary_inequality(3, a, b, p + 0.5).passed


@given(
    are=st.floats(-3.0, 3.0), aim=st.floats(-3.0, 3.0),
    bre=st.floats(-3.0, 3.0), bim=st.floats(-3.0, 3.0),
    p=st.floats(1.0, 2.0),
)
@settings(max_examples=150, deadline=None)
def test_inequality_low_exponent_holds_randomly(are, aim, bre, bim, p):
    a = complex(are, aim)
    b = complex(bre, bim)
    if p == 1.0 and (a == 0 or b == 0):
        return
    assert lab.check_elementary_inequality(2, a, b, p).passed
    if p > 1.0:
        assert lab.check_elementary_inequality(4, a, b, p).passed
    if a != 0:
        assert lab.check_elementary_inequality(5, a, b, 1.0).passed


def test_basic_identity_worked_example():
    got = lab.check_basic_identity(1.0, 1.0j, 3.0)
    assert got.passed and got.margin < 1e-14


@given(
    are=st.floats(0.1, 3.0), aim=st.floats(-3.0, 3.0),
    bre=st.floats(0.1, 3.0), bim=st.floats(-3.0, 3.0),
    p=st.floats(1.0, 6.0),
)
@settings(max_examples=150, deadline=None)
def test_basic_identity_holds_randomly(are, aim, bre, bim, p):
    assert lab.check_basic_identity(complex(are, aim), complex(bre, bim), p).passed


def test_basic_identity_guards_zero_arguments():
    with pytest.raises(ParameterError):
        lab.check_basic_identity(0.0, 1.0, 1.5)
    assert lab.check_basic_identity(0.0, 1.0, 2.0).passed


# --------------------------------------------------------------------------
# power relation
# --------------------------------------------------------------------------

def test_power_relation_disc(big_disc_rule):
    got = lab.check_power_relation(big_disc_rule, 2.0, 2, [0.3], degree=20)
    assert got.passed and got.conclusive
    assert got.margin < 1e-7


def test_power_relation_thullen_origin(thullen_rule):
    got = lab.check_power_relation(thullen_rule, 2.0, 2, [0.0, 0.0], degree=8)
    assert got.passed
    assert abs(got.rhs - 10.0 / math.pi**2) < 1e-6


def test_power_relation_inconclusive_near_boundary(big_disc_rule):
    got = lab.check_power_relation(big_disc_rule, 2.0, 2, [0.88], degree=20)
    assert not got.conclusive and not got.passed
    assert "floor" in got.note


def test_power_relation_rejects_bad_k(disc_rule):
    with pytest.raises(ParameterError):
        lab.check_power_relation(disc_rule, 2.0, 1, [0.3])


# --------------------------------------------------------------------------
# transformation and product structure
# --------------------------------------------------------------------------

def test_transformation_rules_disc(disc_rule):
    aut = BallAutomorphism(a=0.3 + 0.1j, dimension=1)
    got = lab.check_transformation_rules(disc_rule, 2.5, aut, [0.2], [-0.1 + 0.3j], degree=10)
    assert got.passed
    assert got.margin < 1e-6


def test_transformation_rules_ball(ball_rule):
    aut = BallAutomorphism(a=0.2, dimension=2)
    got = lab.check_transformation_rules(
        ball_rule, 2.0, aut, [0.1, 0.2], [-0.1, 0.15j], degree=8
    )
    assert got.passed


def test_transformation_rules_guards(disc_rule, thullen_rule):
    aut = BallAutomorphism(a=0.2, dimension=2)
    with pytest.raises(ParameterError):
        lab.check_transformation_rules(disc_rule, 2.0, aut, [0.1], [0.2])
    with pytest.raises(ParameterError):
        lab.check_transformation_rules(thullen_rule, 2.0, aut, [0.1, 0.1], [0.0, 0.0])


def test_product_rule_bidisc(disc_rule, bidisc_rule):
    got = lab.check_product_rule(disc_rule, bidisc_rule, 3.0, 0.3, -0.2 + 0.2j, degree=8)
    assert got.passed
    assert got.margin < 1e-7


# --------------------------------------------------------------------------
# projection nonlinearity witness
# --------------------------------------------------------------------------

def test_projection_witness_matches_first_order(disc_rule):
    got = lab.check_projection_nonlinearity(disc_rule, 4.0, 0.1)
    assert got.passed
    assert abs(got.rhs - 0.1 * 2.0 * math.pi / 6.0) < 1e-6


def test_projection_witness_sign_below_two(disc_rule):
    got = lab.check_projection_nonlinearity(disc_rule, 1.5, 0.1)
    assert got.passed
    assert np.real(got.rhs) < 0


def test_projection_witness_identity_mode(disc_rule):
    got = lab.check_projection_nonlinearity(disc_rule, 4.0, 0.0)
    assert got.passed and got.margin < 1e-10


def test_projection_witness_guards(disc_rule, bidisc_rule):
    with pytest.raises(ParameterError):
        lab.check_projection_nonlinearity(disc_rule, 2.0, 0.1)
    with pytest.raises(ParameterError):
        lab.check_projection_nonlinearity(bidisc_rule, 4.0, 0.1)
    with pytest.raises(ParameterError):
        lab.check_projection_nonlinearity(disc_rule, 4.0, 0.5)


# --------------------------------------------------------------------------
# sampling and result formatting
# --------------------------------------------------------------------------

def test_sample_interior_points_stay_inside():
    domain = make_domain("thullen", alpha=3.0)
    rng = np.random.default_rng(3)
    points = lab.sample_interior_points(domain, 20, rng, cap=0.7)
    assert len(points) == 20
    from pbergman.domains import contains

    for z in points:
        assert contains(domain, z)
        assert contains(domain, z / 0.7 * 0.999)


def test_sample_interior_points_cap_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ParameterError):
        lab.sample_interior_points(make_domain("disc"), 5, rng, cap=1.0)


def test_check_result_string_forms():
    passing = lab.check_basic_identity(1.0, 1.0j, 3.0)
    assert "pass" in str(passing)
    inconclusive = lab.CheckResult(
        name="x", inputs="", lhs=0.0, rhs=0.0, margin=float("nan"),
        passed=False, tolerance=1e-6, conclusive=False,
    )
    assert "inconclusive" in str(inconclusive)
