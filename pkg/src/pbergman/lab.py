"""Checkable identities, inequalities, limits, and scans.

Every function here either returns a CheckResult (two sides, margin,
verdict) or a ScanTable (axis plus named columns).  The checks sit on
top of the variational solver and the closed forms; none of them keeps
mutable state beyond an optional solve cache, so callers are free to
grid over parameters in any order.

Margin conventions follow the result type: for an inequality check the
margin is rhs - lhs and passing means margin >= -tolerance; for an
identity check the margin is the absolute residual and passing means
margin <= tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import PolyFun, evaluate, sample_at_nodes, weighted_moments
from .closed_forms import BallAutomorphism, ball_automorphism_apply, caratheodory_reference
from .domains import QuadratureRule, contains, volume
from .errors import DomainError, ParameterError
from .solver import default_degree, solve_metric, solve_point_minimizer

__all__ = [
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
]

# Constant for the p = 1 branch of the elementary inequalities.  The
# underlying statement only asserts existence; the value below was
# fixed after a dense 400^3 polar-grid search (moduli up to 10, full
# relative phase) whose observed minimum ratio was 3.375 = 27/8, so
# 1/64 holds with a wide margin.
A1_CONSTANT = 1.0 / 64.0

DEFAULT_SEED = 42


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check."""

    name: str
    inputs: str
    lhs: complex
    rhs: complex
    margin: float
    passed: bool
    tolerance: float
    note: str = ""
    conclusive: bool = True

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        if not self.conclusive:
            verdict = "inconclusive"
        return f"{self.name}[{self.inputs}]: {verdict} (margin {self.margin:.3e})"


@dataclass(frozen=True, eq=False)
class ScanTable:
    """Axis values with named columns and run metadata."""

    axis_name: str
    axis: np.ndarray
    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != len(self.axis):
                raise ParameterError(f"column {name!r} length does not match the axis")

    def rows(self):
        """Header and row tuples, axis first, columns in insertion order."""
        header = [self.axis_name] + list(self.columns)
        cols = [self.axis] + [self.columns[k] for k in self.columns]
        return header, list(zip(*cols))


def _ineq(name, inputs, lhs, rhs, tolerance, note="", conclusive=True) -> CheckResult:
    margin = float(np.real(rhs) - np.real(lhs))
    return CheckResult(
        name=name, inputs=inputs, lhs=lhs, rhs=rhs, margin=margin,
        passed=bool(margin >= -tolerance) and conclusive,
        tolerance=tolerance, note=note, conclusive=conclusive,
    )


def _ident(name, inputs, lhs, rhs, tolerance, note="", conclusive=True) -> CheckResult:
    margin = float(abs(lhs - rhs))
    return CheckResult(
        name=name, inputs=inputs, lhs=lhs, rhs=rhs, margin=margin,
        passed=bool(margin <= tolerance) and conclusive,
        tolerance=tolerance, note=note, conclusive=conclusive,
    )


def _point(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def _digest(**kw) -> str:
    parts = []
    for key, val in kw.items():
        if isinstance(val, np.ndarray):
            val = tuple(np.round(val, 12).tolist())
        parts.append(f"{key}={val}")
    return " ".join(parts)


class MinimizerCache:
    """Memoized point solves for one (rule, p, degree) context.

    Pair checks need the minimizer at both endpoints; suites evaluate
    many pairs drawn from a common point pool, so caching the solves
    turns O(pairs) work into O(points).
    """

    def __init__(self, rule: QuadratureRule, p: float, degree=None, tol=None):
        self.rule = rule
        self.p = float(p)
        self.degree = degree
        self.tol = tol
        self._reports = {}

    def _key(self, z):
        return tuple(np.round(_point(z), 14).tolist())

    def report(self, z):
        key = self._key(z)
        if key not in self._reports:
            self._reports[key] = solve_point_minimizer(
                self.rule, self.p, z, degree=self.degree, tol=self.tol
            )
        return self._reports[key]

    def norm(self, z) -> float:
        return self.report(z).optimal_value

    def kernel(self, z) -> float:
        return self.report(z).optimal_value ** (-self.p)

    def offdiag_m(self, z, w) -> complex:
        return complex(evaluate(self.report(w).minimizer, _point(z)))

    def offdiag_kernel(self, z, w) -> complex:
        return self.offdiag_m(z, w) * self.kernel(w)


def _cache(rule, p, degree, tol, cache: Optional[MinimizerCache]) -> MinimizerCache:
    if cache is not None:
        if abs(cache.p - float(p)) > 1e-14 or cache.rule is not rule:
            raise ParameterError("cache was built for a different rule or exponent")
        return cache
    return MinimizerCache(rule, p, degree=degree, tol=tol)


def sample_interior_points(domain, count: int, rng, cap: float = 0.7):
    """Random points of cap * domain (a fixed compact subset).

    Rejection sampling in the coordinate box; the domains here are
    complete Reinhardt sets, so scaling by cap < 1 stays interior.
    """
    if not 0.0 < cap < 1.0:
        raise ParameterError("cap must sit strictly between 0 and 1")
    n = domain.dimension
    points = []
    while len(points) < count:
        z = rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)
        if contains(domain, z):
            points.append(cap * z)
    return points


# --------------------------------------------------------------------------
# pairwise kernel checks
# --------------------------------------------------------------------------

def kernel_pair_gap(rule, p, z, w, degree=None, tol=None, cache=None) -> float:
    """K_p(z) + K_p(w) - Re{K_p(z,w) + K_p(w,z)}.

    Nonnegative for all pairs, zero exactly on the diagonal; computed
    from two point solves, never by symmetry.
    """
    c = _cache(rule, p, degree, tol, cache)
    cross = c.offdiag_kernel(z, w) + c.offdiag_kernel(w, z)
    return float(c.kernel(z) + c.kernel(w) - np.real(cross))


def check_holder_offdiag(rule, p, z, w, degree=None, tol=None, tolerance=1e-8, cache=None) -> CheckResult:
    """|K_p(z,w)| against K_p(z)^(1/p) K_p(w)^(1/q), conjugate exponents.

    At p = 1 the conjugate factor degenerates to 1, leaving
    |K_1(z,w)| <= K_1(z).
    """
    p = float(p)
    c = _cache(rule, p, degree, tol, cache)
    lhs = abs(c.offdiag_kernel(z, w))
    rhs = c.kernel(z) ** (1.0 / p)
    if p > 1.0:
        rhs *= c.kernel(w) ** (1.0 - 1.0 / p)
    scaled = tolerance * max(rhs, 1.0)
    return _ineq("holder_offdiag", _digest(p=p, z=_point(z), w=_point(w)), lhs, rhs, scaled)


def check_triangle(rule, p, z, w, degree=None, tol=None, tolerance=1e-8, cache=None) -> CheckResult:
    """|m_p(z,w)| against m_p(w) / m_p(z)."""
    c = _cache(rule, p, degree, tol, cache)
    lhs = abs(c.offdiag_m(z, w))
    rhs = c.norm(w) / c.norm(z)
    scaled = tolerance * max(rhs, 1.0)
    return _ineq("triangle", _digest(p=p, z=_point(z), w=_point(w)), lhs, rhs, scaled)


# --------------------------------------------------------------------------
# reproducing formula
# --------------------------------------------------------------------------

def reproducing_residual(rule, p, z, f: PolyFun, degree=None, report=None) -> float:
    """Residual of f(z) = K_p(z) * integral of |m|^(p-2) conj(m) f.

    m is the point minimizer at z.  The identity is exact on the span
    by the first-order optimality condition, so the residual measures
    solver quality, normalized by 1 + |f(z)|.  Pass a precomputed
    report to amortize the solve across many test functions.
    """
    if report is None:
        report = solve_point_minimizer(rule, p, z, degree=degree)
    s = sample_at_nodes(report.minimizer, rule)
    fs = sample_at_nodes(f, rule)
    m = np.abs(s)
    nz = m > 0.0
    integrand = np.zeros_like(s)
    integrand[nz] = m[nz] ** (p - 2.0) * np.conj(s[nz]) * fs[nz]
    integral = complex(np.sum(rule.weights * integrand))
    value = report.optimal_value ** (-p) * integral
    fz = complex(evaluate(f, _point(z)))
    return float(abs(fz - value) / (1.0 + abs(fz)))


# --------------------------------------------------------------------------
# Levi form estimates
# --------------------------------------------------------------------------

def levi_estimate(rule, p, z, X, radii=(0.02, 0.04, 0.08), degree=None, angles=64, tol=None) -> float:
    """Extrapolated r^-2 [circle average - center] of log K_p.

    The circle is z + r e^(i theta) X over the given radii; each radius
    gives one second-difference quotient and the sequence is Richardson
    extrapolated in h = r^2.  Smoothness of the kernel on the model
    domains makes the extrapolated value the classical complex Hessian
    in direction X.
    """
    z = _point(z)
    X = _point(X)
    if z.shape != X.shape:
        raise ParameterError("z and X must have matching shapes")
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0.0:
        raise ParameterError("radii must be positive")
    thetas = 2.0 * math.pi * np.arange(angles) / angles
    for r in radii:
        for t in thetas:
            if not contains(rule.domain, z + r * np.exp(1j * t) * X):
                raise DomainError(f"circle of radius {r} leaves the domain")

    cache = MinimizerCache(rule, p, degree=degree, tol=tol)
    center = math.log(cache.kernel(z))
    quotients = []
    warm = None
    for r in radii:
        total = 0.0
        for t in thetas:
            point = z + r * np.exp(1j * t) * X
            rep = solve_point_minimizer(
                rule, p, point, degree=degree, tol=tol, initial=warm
            )
            warm = rep.minimizer.coefficients
            total += math.log(rep.optimal_value ** (-p))
        quotients.append((total / angles - center) / r**2)

    # Neville extrapolation to h = 0 in h = r^2
    hs = [r * r for r in radii]
    vals = list(quotients)
    for level in range(1, len(vals)):
        for i in range(len(vals) - level):
            num = hs[i + level] * vals[i] - hs[i] * vals[i + 1]
            vals[i] = num / (hs[i + level] - hs[i])
    return float(vals[0])


def check_levi_bounds(rule, p, z, X, degree=None, radii=(0.02, 0.04, 0.08), tolerance=1e-2) -> CheckResult:
    """Levi form of log K_p against the squared metric floor.

    For p >= 2 the floor is B_p(z;X)^2; for p <= 2 it is the squared
    Caratheodory metric, which needs a disc or ball reference.
    """
    p = float(p)
    levi = levi_estimate(rule, p, z, X, radii=radii, degree=degree)
    if p >= 2.0:
        floor = solve_metric(rule, p, z, X, degree=degree).value ** 2
        floor_name = "metric"
    else:
        domain = rule.domain
        if domain.kind == "polydisc" and domain.dimension == 1:
            kind = "disc"
        elif domain.kind == "ball":
            kind = "ball"
        else:
            raise ParameterError(
                f"no Caratheodory reference on {domain.kind}; the p <= 2 branch needs disc or ball"
            )
        floor = caratheodory_reference(kind, z, X) ** 2
        floor_name = "caratheodory"
    return _ineq(
        "levi_bound", _digest(p=p, z=_point(z), X=_point(X)),
        floor, levi, tolerance, note=f"floor={floor_name}",
    )


# --------------------------------------------------------------------------
# scans over p
# --------------------------------------------------------------------------

def p_scan(rule, z, p_grid, w=None, X=None, degree=None, tol=None) -> ScanTable:
    """Minimizer norm, kernel, and scaled kernel along an ascending p grid.

    Optional columns: the two-point value m_p(z, w) and the metric in
    direction X.  The scaled kernel (volume * K_p)^(1/p) must be
    nonincreasing in p; the metadata carries that flag plus solver
    convergence across the grid.
    """
    grid = [float(p) for p in p_grid]
    if grid != sorted(grid):
        raise ParameterError("p_grid must be ascending")
    z = _point(z)
    vol = volume(rule.domain)
    norms, kernels, scaled, offdiag, metric = [], [], [], [], []
    converged = True
    warm = None
    for p in grid:
        rep = solve_point_minimizer(rule, p, z, degree=degree, tol=tol, initial=warm)
        warm = rep.minimizer.coefficients
        converged = converged and rep.converged
        norms.append(rep.optimal_value)
        kernels.append(rep.optimal_value ** (-p))
        scaled.append((vol * kernels[-1]) ** (1.0 / p))
        if w is not None:
            wrep = solve_point_minimizer(rule, p, w, degree=degree, tol=tol)
            converged = converged and wrep.converged
            offdiag.append(complex(evaluate(wrep.minimizer, z)))
        if X is not None:
            mres = solve_metric(rule, p, z, X, degree=degree, tol=tol)
            converged = converged and mres.point_report.converged
            metric.append(mres.value)
    columns = {
        "minimum_norm": np.array(norms),
        "kernel": np.array(kernels),
        "scaled_kernel": np.array(scaled),
    }
    if w is not None:
        columns["offdiag_m"] = np.array(offdiag)
    if X is not None:
        columns["metric"] = np.array(metric)
    drops = np.diff(columns["scaled_kernel"])
    meta = {
        "domain": rule.domain.describe(),
        "degree": degree if degree is not None else default_degree(rule),
        "radial_order": rule.radial_order,
        "angular_order": rule.angular_order,
        "point": tuple(z.tolist()),
        "scaled_kernel_nonincreasing": bool(np.all(drops <= 1e-8)),
        "all_converged": bool(converged),
    }
    if X is not None:
        meta["metric_nonincreasing"] = bool(np.all(np.diff(columns["metric"]) <= 1e-8))
    return ScanTable(axis_name="p", axis=np.array(grid), columns=columns, metadata=meta)


# --------------------------------------------------------------------------
# power relation
# --------------------------------------------------------------------------

def check_power_relation(rule, p, k, z, degree=None, tolerance=1e-6, modulus_floor=1e-3) -> CheckResult:
    """K_(pk)(z) against K_p(z), with the minimizer-power cross-check.

    Valid when the base minimizer is zero-free; we test its modulus on
    the quadrature nodes and report an inconclusive result below the
    floor instead of a verdict.  Both exponents are solved at the same
    degree, the k-th power of the higher-exponent minimizer is
    re-expanded over the basis, and the in-span coefficients are
    compared with the base minimizer (the power's out-of-span tail is
    a truncation effect, second order in the kernel values).
    """
    p = float(p)
    k = int(k)
    if k < 2:
        raise ParameterError("the power relation needs an integer k >= 2")
    if degree is None:
        degree = default_degree(rule)
    base = solve_point_minimizer(rule, p, z, degree=degree)
    samples = sample_at_nodes(base.minimizer, rule)
    floor = float(np.min(np.abs(samples)))
    scale = float(np.max(np.abs(samples)))
    inputs = _digest(p=p, k=k, z=_point(z))
    kernel_base = base.optimal_value ** (-p)
    if floor < modulus_floor * scale:
        return CheckResult(
            name="power_relation", inputs=inputs, lhs=kernel_base, rhs=float("nan"),
            margin=float("nan"), passed=False, tolerance=tolerance,
            note=f"minimizer modulus {floor:.2e} under the zero-free floor", conclusive=False,
        )
    high = solve_point_minimizer(rule, p * k, z, degree=degree)
    kernel_high = high.optimal_value ** (-p * k)
    powered = sample_at_nodes(high.minimizer, rule) ** k
    basis = base.minimizer.basis
    powered_coeff = weighted_moments(basis, rule, powered, conjugate_basis=True)
    coeff_gap = float(np.max(np.abs(powered_coeff - base.minimizer.coefficients)))
    coeff_scale = float(np.max(np.abs(base.minimizer.coefficients)))
    kernel_gap = abs(kernel_high - kernel_base) / max(kernel_base, 1e-300)
    margin = max(kernel_gap, coeff_gap / max(coeff_scale, 1.0))
    return CheckResult(
        name="power_relation", inputs=inputs, lhs=kernel_high, rhs=kernel_base,
        margin=float(margin), passed=bool(margin <= tolerance), tolerance=tolerance,
        note=f"kernel gap {kernel_gap:.2e}, coefficient gap {coeff_gap:.2e}",
    )


# --------------------------------------------------------------------------
# modulus-of-continuity probe (exploratory, never a gate)
# --------------------------------------------------------------------------

def holder_modulus_probe(rule, p, z, w_center, radii, degree=None, direction=None) -> ScanTable:
    """Ratios |m_p(z,w) - m_p(z,w')| / |w - w'|^e over shrinking offsets.

    The exponent e is 1/2 for p > 1 and 1/(2(n+2)) at p = 1.  The table
    reports the ratios and their maximum; this is exploratory evidence
    of boundedness, not a pass/fail check.
    """
    p = float(p)
    z = _point(z)
    w = _point(w_center)
    n = rule.domain.dimension
    exponent = 0.5 if p > 1.0 else 1.0 / (2.0 * (n + 2))
    if direction is None:
        direction = np.zeros(n, dtype=complex)
        direction[0] = 1.0
    else:
        direction = _point(direction)
        direction = direction / np.linalg.norm(direction)
    cache = MinimizerCache(rule, p, degree=degree)
    ratios = []
    for r in radii:
        shifted = w + float(r) * direction
        if not contains(rule.domain, shifted):
            raise DomainError(f"offset {r} pushes the probe point outside")
        gap = abs(cache.offdiag_m(z, w) - cache.offdiag_m(z, shifted))
        ratios.append(gap / float(r) ** exponent)
    ratios = np.array(ratios)
    meta = {
        "domain": rule.domain.describe(),
        "exponent": exponent,
        "max_ratio": float(ratios.max()),
        "point": tuple(z.tolist()),
        "center": tuple(w.tolist()),
    }
    return ScanTable(
        axis_name="offset", axis=np.asarray(list(radii), dtype=float),
        columns={"ratio": ratios}, metadata=meta,
    )


# --------------------------------------------------------------------------
# boundary ratio (disc closed forms)
# --------------------------------------------------------------------------

def boundary_ratio_scan(p, t_grid, fit_window=0.05) -> ScanTable:
    """K_p(t)^(1/p) / K_2(t)^(1/2) on the disc against its envelope.

    Closed forms give the ratio pi^(1/2-1/p) (1 - t^2)^(1-2/p); the
    envelope is delta^(1/2-1/p) with delta = 1 - t.  The metadata holds
    the fitted envelope constant and the log-log slope of the ratio
    over the sub-grid delta <= fit_window.
    """
    p = float(p)
    if p < 1.0:
        raise ParameterError("boundary_ratio_scan needs p >= 1")
    t = np.asarray(list(t_grid), dtype=float)
    if np.any(t < 0.5) or np.any(t >= 1.0):
        raise ParameterError("t_grid must sit inside [0.5, 1)")
    delta = 1.0 - t
    ratio = math.pi ** (0.5 - 1.0 / p) * (1.0 - t**2) ** (1.0 - 2.0 / p)
    envelope = delta ** (0.5 - 1.0 / p)
    constant = float(np.max(ratio / envelope))
    window = delta <= fit_window
    slope = float("nan")
    if np.count_nonzero(window) >= 2:
        slope = float(np.polyfit(np.log(delta[window]), np.log(ratio[window]), 1)[0])
    meta = {
        "domain": "disc",
        "p": p,
        "envelope_constant": constant,
        "slope": slope,
        "slope_target": 1.0 - 2.0 / p,
        "fit_window": fit_window,
    }
    return ScanTable(
        axis_name="t", axis=t,
        columns={"delta": delta, "ratio": ratio, "envelope": envelope},
        metadata=meta,
    )


# --------------------------------------------------------------------------
# scalar inequalities and the basic identity
# --------------------------------------------------------------------------

def _phase_times_modpow(a: complex, exponent: float) -> complex:
    """|a|^exponent * conj(a)/|a|, continuously extended by 0 at a = 0.

    The phase comes from the argument, not a division, so subnormal
    magnitudes stay finite.
    """
    r = abs(a)
    if r == 0.0:
        return 0.0j
    return r**exponent * np.exp(-1j * np.angle(a))


def _rescaled(a: complex, b: complex) -> tuple:
    """Normalize (a, b) by the larger modulus when it is extreme.

    Every inequality and identity here is homogeneous in (a, b), so
    dividing both by max(|a|, |b|) preserves the verdict while keeping
    powers like s^(p-4) or |b-a|^p inside floating-point range.
    """
    m = max(abs(a), abs(b))
    if m > 4.0 or 0.0 < m < 1e-4:
        return a / m, b / m, "rescaled by homogeneity"
    return a, b, ""


def check_elementary_inequality(which: int, a: complex, b: complex, p: float, tolerance=1e-12) -> CheckResult:
    """One of the five scalar inequalities behind the regularity results.

    Branches and their exponent ranges:
      1: p >= 2   difference pairing against the averaged square and
                  the 2^(1-p) |b-a|^p floor (both links of the chain)
      2: 1<=p<=2  difference pairing against the (p-1)-weighted square
                  plus the imaginary-part term
      3: p > 2    first-order expansion of |b|^p with a 4^-(p+3) floor
      4: 1<p<=2   same expansion with A_p = (p/2) min(1, p-1)
      5: p = 1    same expansion with the grid-verified constant 1/64
    The tolerance is relative to the magnitude of the terms involved.
    """
    a = complex(a)
    b = complex(b)
    p = float(p)
    inputs = _digest(which=which, a=a, b=b, p=p)
    a, b, prefix = _rescaled(a, b)
    scale = abs(a) ** p + abs(b) ** p + 1e-300
    tol = tolerance * max(scale, 1.0)
    if which == 1:
        if p < 2.0:
            raise ParameterError("branch 1 needs p >= 2")
        pairing = np.real(
            (_phase_times_modpow(b, p - 1.0) - _phase_times_modpow(a, p - 1.0)) * (b - a)
        )
        mid = 0.5 * (abs(b) ** (p - 2.0) + abs(a) ** (p - 2.0)) * abs(b - a) ** 2
        floor = 2.0 ** (1.0 - p) * abs(b - a) ** p
        margin = min(pairing - mid, mid - floor)
        note = "; ".join(filter(None, [prefix, "chained with the power floor"]))
        return CheckResult(
            name="elementary_1", inputs=inputs, lhs=mid, rhs=pairing,
            margin=float(margin), passed=bool(margin >= -tol), tolerance=tol,
            note=note,
        )
    if which == 2:
        if not 1.0 <= p <= 2.0:
            raise ParameterError("branch 2 needs 1 <= p <= 2")
        if p == 1.0 and (a == 0 or b == 0):
            raise ParameterError("branch 2 at p = 1 needs nonzero a and b")
        pairing = np.real(
            (_phase_times_modpow(b, p - 1.0) - _phase_times_modpow(a, p - 1.0)) * (b - a)
        )
        s = abs(a) + abs(b)
        if s == 0.0:
            return _ineq("elementary_2", inputs, 0.0, 0.0, tol, note=prefix)
        rhs = (p - 1.0) * abs(b - a) ** 2 * s ** (p - 2.0)
        rhs += (2.0 - p) * abs(np.imag(a * np.conj(b))) ** 2 * s ** (p - 4.0)
        return _ineq("elementary_2", inputs, rhs, pairing, tol, note=prefix)
    if which == 3:
        if p <= 2.0:
            raise ParameterError("branch 3 needs p > 2")
        rhs = abs(a) ** p + p * np.real(_phase_times_modpow(a, p - 1.0) * (b - a))
        rhs += 4.0 ** (-(p + 3.0)) * abs(b - a) ** p
        return _ineq("elementary_3", inputs, rhs, abs(b) ** p, tol, note=prefix)
    if which == 4:
        if not 1.0 < p <= 2.0:
            raise ParameterError("branch 4 needs 1 < p <= 2")
        s = abs(a) + abs(b)
        rhs = abs(a) ** p + p * np.real(_phase_times_modpow(a, p - 1.0) * (b - a))
        if s > 0.0:
            rhs += 0.5 * p * min(1.0, p - 1.0) * abs(b - a) ** 2 * s ** (p - 2.0)
        return _ineq("elementary_4", inputs, rhs, abs(b) ** p, tol, note=prefix)
    if which == 5:
        if p != 1.0:
            raise ParameterError("branch 5 is the p = 1 case")
        if a == 0:
            raise ParameterError("branch 5 needs a != 0")
        s = abs(a) + abs(b)
        rhs = abs(a) + np.real(_phase_times_modpow(a, 0.0) * (b - a))
        rhs += A1_CONSTANT * abs(np.imag(np.conj(a) * b)) ** 2 * s ** (-3.0)
        return _ineq("elementary_5", inputs, rhs, abs(b), tol, note=prefix)
    raise ParameterError(f"unknown inequality branch {which}")


def check_basic_identity(a: complex, b: complex, p: float, tolerance=1e-12) -> CheckResult:
    """Algebraic identity tying the difference pairing to square terms.

    (|b|^(p-2) + |a|^(p-2)) |b-a|^2 + (|b|^(p-2) - |a|^(p-2)) (|b|^2 - |a|^2)
    equals twice the real difference pairing.
    """
    a = complex(a)
    b = complex(b)
    p = float(p)
    inputs = _digest(a=a, b=b, p=p)
    a, b, prefix = _rescaled(a, b)
    if p < 2.0:
        # |a|^(p-2) blows up as a -> 0, so the two sides individually
        # diverge and cancellation wrecks the comparison; require the
        # moduli within four orders of magnitude of each other.
        m = max(abs(a), abs(b))
        if m == 0.0 or min(abs(a), abs(b)) < 1e-4 * m:
            raise ParameterError(
                "the identity needs comparably sized nonzero arguments when p < 2"
            )
    pa = abs(a) ** (p - 2.0) if a != 0 else (1.0 if p == 2.0 else 0.0)
    pb = abs(b) ** (p - 2.0) if b != 0 else (1.0 if p == 2.0 else 0.0)
    lhs = (pb + pa) * abs(b - a) ** 2 + (pb - pa) * (abs(b) ** 2 - abs(a) ** 2)
    rhs = 2.0 * np.real(
        (_phase_times_modpow(b, p - 1.0) - _phase_times_modpow(a, p - 1.0)) * (b - a)
    )
    scale = abs(lhs) + abs(rhs) + 1.0
    return _ident("basic_identity", inputs, lhs, rhs, tolerance * scale, note=prefix)


# --------------------------------------------------------------------------
# transformation, product, and projection structure
# --------------------------------------------------------------------------

def check_transformation_rules(rule, p, automorphism: BallAutomorphism, z, w, degree=None, tolerance=1e-6) -> CheckResult:
    """All four change-of-variable laws under one self-automorphism.

    Compares numeric values at (z, w) with numeric values at the image
    pair scaled by the Jacobian powers; the margin is the largest
    relative gap across the four laws.
    """
    p = float(p)
    domain = rule.domain
    if domain.kind == "ball" or (domain.kind == "polydisc" and domain.dimension == 1):
        if automorphism.dimension != domain.dimension:
            raise ParameterError("automorphism dimension does not match the domain")
    else:
        raise ParameterError("transformation checks need the disc or the ball")
    z = _point(z)
    w = _point(w)
    fz, jz = ball_automorphism_apply(automorphism, z)
    fw, jw = ball_automorphism_apply(automorphism, w)
    c = MinimizerCache(rule, p, degree=degree)
    gaps = {
        "norm": abs(c.norm(z) - c.norm(fz) * abs(jz) ** (-2.0 / p)) / c.norm(z),
        "kernel": abs(c.kernel(z) - c.kernel(fz) * abs(jz) ** 2) / c.kernel(z),
    }
    m_left = c.offdiag_m(z, w)
    m_right = c.offdiag_m(fz, fw) * jz ** (2.0 / p) * jw ** (-2.0 / p)
    gaps["offdiag_m"] = abs(m_left - m_right) / max(abs(m_left), 1e-12)
    k_left = c.offdiag_kernel(z, w)
    k_right = (
        c.offdiag_kernel(fz, fw)
        * jz ** (2.0 / p)
        * jw ** (1.0 - 2.0 / p)
        * np.conj(jw)
    )
    gaps["offdiag_kernel"] = abs(k_left - k_right) / max(abs(k_left), 1e-12)
    worst = max(gaps, key=gaps.get)
    note = " ".join(f"{k}={v:.2e}" for k, v in gaps.items())
    return CheckResult(
        name="transformation_rules",
        inputs=_digest(p=p, a=automorphism.a, z=z, w=w),
        lhs=m_left, rhs=m_right, margin=float(gaps[worst]),
        passed=bool(gaps[worst] <= tolerance), tolerance=tolerance, note=note,
    )


def check_product_rule(disc_rule, bidisc_rule, p, z1, z2, degree=None, tolerance=1e-7) -> CheckResult:
    """Bidisc minimum norm against the product of two disc solves."""
    p = float(p)
    pair = solve_point_minimizer(bidisc_rule, p, [z1, z2], degree=degree)
    left = pair.optimal_value
    first = solve_point_minimizer(disc_rule, p, [z1], degree=degree)
    second = solve_point_minimizer(disc_rule, p, [z2], degree=degree)
    right = first.optimal_value * second.optimal_value
    return _ident(
        "product_rule", _digest(p=p, z1=complex(z1), z2=complex(z2)),
        left, right, tolerance * max(right, 1.0),
        note="bidisc norm vs disc-product norm",
    )


def check_projection_nonlinearity(rule, p, t: complex, tolerance=1e-3) -> CheckResult:
    """Pairing integral of conj(z) + t conj(z)^2 against its linearization.

    The weighted pairing with the constant function stays near
    ((p-2)/2) t integral(|z|^p), so it is nonzero for p != 2 and t != 0
    even though both conjugate monomials project to zero individually.
    Passing means the computed pairing keeps at least half the
    first-order magnitude (or vanishes, when t = 0).
    """
    p = float(p)
    domain = rule.domain
    if not (domain.kind == "polydisc" and domain.dimension == 1):
        raise ParameterError("the nonlinearity witness is a disc computation")
    if abs(p - 2.0) <= 1e-14:
        raise ParameterError("p = 2 makes the pairing vanish identically")
    if abs(t) > 0.2:
        raise ParameterError("the expansion needs |t| <= 0.2")
    zq = rule.nodes[:, 0]
    ft = np.conj(zq) + complex(t) * np.conj(zq) ** 2
    m = np.abs(ft)
    nz = m > 0.0
    integrand = np.zeros_like(ft)
    integrand[nz] = m[nz] ** (p - 2.0) * np.conj(ft[nz])
    value = complex(np.sum(rule.weights * integrand))
    first_order = 0.5 * (p - 2.0) * complex(t) * 2.0 * math.pi / (p + 2.0)
    inputs = _digest(p=p, t=complex(t))
    if t == 0:
        return _ident("projection_nonlinearity", inputs, value, 0.0, 1e-10,
                      note="pairing vanishes with t")
    margin = abs(value) - 0.5 * abs(first_order)
    return CheckResult(
        name="projection_nonlinearity", inputs=inputs,
        lhs=first_order, rhs=value, margin=float(margin),
        passed=bool(margin >= -tolerance), tolerance=tolerance,
        note=f"pairing {value:.6f} vs first order {first_order:.6f}",
    )
