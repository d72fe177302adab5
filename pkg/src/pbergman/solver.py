"""Constrained L^p minimization over polynomial spans, and what it yields.

Everything here reduces to one convex problem: minimize the grid L^p
norm of h - f (h a fixed node function, possibly zero) over polynomials
f in the span of a truncated basis, subject to linear constraints on
the coefficients.  Point evaluations of optimizers give reproducing
kernels on and off the diagonal, derivative-constrained values give the
induced metric, and the unconstrained h != 0 case is metric projection.

The solver is iteratively reweighted least squares: each step minimizes
sum_q w_q max(|F_q|, eps)^(p-2) |h_q - f_q|^2 under the constraints,
which is a linear solve in the orthonormalized basis.  For p < 2 the
floor eps is driven to (nearly) zero on a logarithmic schedule; for
p > 2 a damped step keeps the true objective monotone.  Convergence is
certified by a stationarity residual: the optimizer must annihilate
sum_q w_q |F_q|^(p-2) conj(F_q) g(q) for every basis direction g
tangent to the constraints, relative to the norms of F and g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .basis import (
    Basis,
    MultiIndex,
    PolyFun,
    check_exponent,
    derivative_rows,
    evaluate,
    graded_key,
    lp_norm,
    monomial_basis,
    point_rows,
    sample_at_nodes,
    weighted_gram,
    weighted_moments,
)
from .domains import QuadratureRule, contains, volume
from .errors import DomainError, ParameterError, UnsupportedExponentError

MAX_ITERATIONS = 500
DEFAULT_TOL = 1e-8
DEFAULT_TOL_P1 = 1e-6
MAX_HALVINGS = 20
MAX_STALL_CHECKS = 12


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one L^p minimization.

    optimal_value is the achieved L^p norm (of the residual, in
    projection problems).  converged means the stationarity residual
    met its tolerance; a False flag still carries the best iterate.
    """

    optimal_value: float
    minimizer: PolyFun
    kkt_residual: float
    iterations: int
    epsilon_final: float
    converged: bool


@dataclass(frozen=True, eq=False)
class OffDiagonalResult:
    """Two-point kernel data: the minimizer value and the kernel itself."""

    m_value: complex
    kernel_value: complex
    report: SolveReport


@dataclass(frozen=True, eq=False)
class MetricResult:
    """Metric value with the two solve reports behind it."""

    value: float
    point_report: SolveReport
    derivative_report: SolveReport


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Best approximation in the span and the L^p distance to it."""

    projection: PolyFun
    distance: float
    report: SolveReport


def default_degree(rule: QuadratureRule) -> int:
    """Largest basis degree the rule's angular order supports."""
    from .basis import MAX_DEGREE

    return min((rule.angular_order - 4) // 4, MAX_DEGREE)


# --------------------------------------------------------------------------
# linear algebra pieces
# --------------------------------------------------------------------------

def _apply_constraints(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Minimal correction moving c onto the affine set A c = b."""
    if A.shape[0] == 0:
        return c
    r = b - A @ c
    if np.max(np.abs(r)) == 0.0:
        return c
    dc, *_ = np.linalg.lstsq(A, r, rcond=None)
    return c + dc


def _initial_point(A: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Constant function if the constraints allow it, else least norm."""
    a0 = A[:, 0]
    denom = np.vdot(a0, a0).real
    if denom > 0.0:
        gamma = np.vdot(a0, b) / denom
        if np.linalg.norm(a0 * gamma - b) <= 1e-12 * max(np.linalg.norm(b), 1.0):
            c = np.zeros(N, dtype=complex)
            c[0] = gamma
            return c
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    return c


def _tangent_projector(A: np.ndarray, N: int) -> np.ndarray:
    """Orthogonal projector onto the null space of A (identity if empty)."""
    if A.shape[0] == 0:
        return np.eye(N, dtype=complex)
    M = A @ A.conj().T
    X = np.linalg.solve(M, A)
    return np.eye(N, dtype=complex) - A.conj().T @ X


def _solve_weighted_step(
    G: np.ndarray, A: np.ndarray, t: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Minimize c^H G c - 2 Re(t^H c) subject to A c = b."""
    N = G.shape[0]
    jitter = 1e-14 * max(np.trace(G).real, 1e-300) / N
    for attempt in range(3):
        try:
            cf = sla.cho_factor(
                G + (jitter * 100.0 ** attempt) * np.eye(N),
                lower=True,
                check_finite=False,
            )
            cp = sla.cho_solve(cf, t, check_finite=False)
            if A.shape[0] == 0:
                return cp
            Y = sla.cho_solve(cf, A.conj().T, check_finite=False)
            S = A @ Y
            lam = sla.solve(S, A @ cp - b, check_finite=False)
            return cp - Y @ lam
        except (sla.LinAlgError, ValueError):
            continue
    # Assemble the full stationarity system and least-squares it.
    k = A.shape[0]
    K = np.zeros((N + k, N + k), dtype=complex)
    K[:N, :N] = G
    K[:N, N:] = A.conj().T
    K[N:, :N] = A
    rhs = np.concatenate([t, b])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    return sol[:N]


# --------------------------------------------------------------------------
# stationarity residual
# --------------------------------------------------------------------------

def _coarse_node_subset(rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """Angular stride-8 node subset with rescaled weights."""
    g = rule.tensor
    idx = (
        np.arange(rule.node_count)
        .reshape(g.m1.size, g.s2.size, g.M1, g.M2)[:, :, ::8, ::8]
        .reshape(-1)
    )
    w = rule.weights[idx]
    return idx, w * (rule.weights.sum() / w.sum())


def _stationarity_residual(
    basis: Basis,
    rule: QuadratureRule,
    p: float,
    samples: np.ndarray,
    P: np.ndarray,
    exact_denominators: bool,
) -> float:
    """Normalized worst violation of the optimality conditions.

    samples holds the node values of the function whose norm is being
    minimized.  P maps basis directions into the constraint-tangent
    space; the residual is max over directions g of
    |sum w |F|^(p-2) conj(F) g| / (||F||_p^(p-1) ||g||_p).

    Denominators are exact in one variable.  In two variables they are
    exact only on demand: the cheap route uses a power-mean lower bound
    for p >= 2 (conservative, so the reported residual can only be an
    overestimate) and an angular-subsampled estimate below p = 2.
    """
    w = rule.weights
    m = np.abs(samples)
    scale = float(m.max())
    if scale == 0.0:
        return 0.0
    mh = m / scale
    psi = np.zeros_like(samples)
    nz = m > 0.0
    psi[nz] = mh[nz] ** (p - 1.0) * (samples[nz].conj() / m[nz])
    t = weighted_moments(basis, rule, psi, conjugate_basis=False)
    num = np.abs(P.T @ t)
    norm_h = float((w @ mh ** p) ** (1.0 / p))

    if basis.dimension == 1 or exact_denominators:
        if basis.dimension == 1:
            Phi = point_rows(basis, rule.nodes)
            cols = Phi @ P
            den = (w @ np.abs(cols) ** p) ** (1.0 / p)
        else:
            den = np.empty(basis.size)
            for r in range(basis.size):
                g_r = PolyFun(basis, P[:, r])
                den[r] = (w @ np.abs(sample_at_nodes(g_r, rule)) ** p) ** (1.0 / p)
    elif p >= 2.0:
        # ||g||_p >= vol^(1/p - 1/2) ||g||_2 and the basis is orthonormal.
        den = np.linalg.norm(P, axis=0) * volume(rule.domain) ** (1.0 / p - 0.5)
    else:
        idx, ws = _coarse_node_subset(rule)
        Phi = point_rows(basis, rule.nodes[idx])
        cols = Phi @ P
        den = (ws @ np.abs(cols) ** p) ** (1.0 / p)

    keep = den > 1e-12 * max(float(den.max()), 1e-300)
    if not np.any(keep):
        return 0.0
    return float(np.max(num[keep] / (norm_h ** (p - 1.0) * den[keep])))


def kkt_residual(f: PolyFun, rule: QuadratureRule, p: float, z) -> float:
    """Stationarity residual of f for the point problem at z.

    Measures how far f is from being the norm minimizer among functions
    with the same value at z: the worst, normalized pairing of
    |f|^(p-2) conj(f) against basis directions vanishing at z.  Exact
    denominators are used in every dimension, so this is deliberate on
    large two-variable grids.
    """
    p = check_exponent(p)
    basis = f.basis
    A = point_rows(basis, [z])
    P = _tangent_projector(A, basis.size)
    samples = sample_at_nodes(f, rule)
    return _stationarity_residual(basis, rule, p, samples, P, exact_denominators=True)


# --------------------------------------------------------------------------
# the solver core
# --------------------------------------------------------------------------

def _smoothed_objective(w: np.ndarray, mh: np.ndarray, p: float, eh: float) -> float:
    """sum w phi(|F|/scale) with the quadratic cap below the floor eh."""
    if eh <= 0.0:
        return float(w @ mh ** p)
    out = np.where(
        mh >= eh,
        mh ** p,
        (p / 2.0) * eh ** (p - 2.0) * mh ** 2 + (1.0 - p / 2.0) * eh ** p,
    )
    return float(w @ out)


def _minimize(
    basis: Basis,
    rule: QuadratureRule,
    p: float,
    A: Optional[np.ndarray],
    b: Optional[np.ndarray],
    target: Optional[np.ndarray] = None,
    initial: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    max_iterations: int = MAX_ITERATIONS,
) -> SolveReport:
    """Minimize ||target - f||_p over the span subject to A c = b."""
    N = basis.size
    w = rule.weights
    A = np.zeros((0, N), dtype=complex) if A is None else np.asarray(A, dtype=complex).reshape(-1, N)
    b = np.zeros(0, dtype=complex) if b is None else np.asarray(b, dtype=complex).reshape(-1)
    h = None if target is None else np.asarray(target, dtype=complex).reshape(-1)
    if h is not None and h.size != rule.node_count:
        raise ParameterError("target values must be given on the rule's nodes")
    if tol is None:
        tol = DEFAULT_TOL_P1 if p <= 1.0 + 1e-12 else DEFAULT_TOL

    if initial is not None:
        c = np.asarray(initial, dtype=complex).reshape(N).copy()
    elif h is not None:
        c = weighted_moments(basis, rule, h, conjugate_basis=True)
    else:
        c = _initial_point(A, b, N)
    c = _apply_constraints(A, b, c)

    def residual_samples(cv: np.ndarray) -> np.ndarray:
        s = sample_at_nodes(PolyFun(basis, cv), rule)
        return h - s if h is not None else s

    P = _tangent_projector(A, N)
    s = residual_samples(c)
    m = np.abs(s)
    fscale = float(m.max())
    href = float(np.max(np.abs(h))) if h is not None else fscale

    def report(cv, sv, iters, eps, kkt, conv) -> SolveReport:
        mv = np.abs(sv)
        sc = max(float(mv.max()), 1e-300)
        val = sc * float((w @ (mv / sc) ** p) ** (1.0 / p))
        return SolveReport(
            optimal_value=val,
            minimizer=PolyFun(basis, cv),
            kkt_residual=kkt,
            iterations=iters,
            epsilon_final=eps,
            converged=conv,
        )

    # Residual already negligible (projection of an in-span target).
    if fscale <= 1e-14 * max(href, 1e-300):
        return report(c, s, 0, 0.0, 0.0, True)

    # p = 2 in the orthonormalized basis is a single linear solve.
    if abs(p - 2.0) <= 1e-14:
        if h is not None:
            c = weighted_moments(basis, rule, h, conjugate_basis=True)
            c = _apply_constraints(A, b, c)
        else:
            c, *_ = np.linalg.lstsq(A, b, rcond=None)
        s = residual_samples(c)
        kkt = _stationarity_residual(basis, rule, p, s, P, exact_denominators=False)
        return report(c, s, 1, 0.0, kkt, kkt <= tol)

    if p < 2.0:
        floor = (1e-8 if p <= 1.0 + 1e-12 else 1e-10) * fscale
        eps_levels = []
        e = 1e-2 * fscale
        while e > floor * 1.0000001:
            eps_levels.append(e)
            e /= 10.0
        eps_levels.append(floor)
    else:
        eps_levels = [0.0]

    theta0 = 1.0 if p <= 4.0 else 4.0 / p
    level = 0
    eps = eps_levels[0]
    J = _smoothed_objective(w, m / fscale, p, eps / fscale)
    kkt = math.inf
    converged = False
    stalls = 0
    iters = 0

    while iters < max_iterations:
        iters += 1
        dens = (np.maximum(m, eps) / fscale) ** (p - 2.0)
        G = weighted_gram(basis, rule, dens)
        t = (
            weighted_moments(basis, rule, dens * h, conjugate_basis=True)
            if h is not None
            else np.zeros(N, dtype=complex)
        )
        c_new = _solve_weighted_step(G, A, t, b)

        theta = theta0
        accepted = False
        for _ in range(MAX_HALVINGS):
            c_try = _apply_constraints(A, b, c + theta * (c_new - c))
            s_try = residual_samples(c_try)
            m_try = np.abs(s_try)
            J_try = _smoothed_objective(w, m_try / fscale, p, eps / fscale)
            if J_try <= J * (1.0 + 1e-15):
                accepted = True
                break
            theta *= 0.5

        if accepted:
            rel = (J - J_try) / max(abs(J_try), 1e-300)
            c, s, m, J = c_try, s_try, m_try, J_try
        else:
            rel = 0.0

        stage_final = level + 1 >= len(eps_levels)
        if rel < (1e-12 if stage_final else 1e-9):
            if not stage_final:
                level += 1
                eps = eps_levels[level]
                J = _smoothed_objective(w, m / fscale, p, eps / fscale)
                continue
            kkt = _stationarity_residual(basis, rule, p, s, P, exact_denominators=False)
            stalls += 1
            if kkt <= tol:
                converged = True
                break
            if stalls >= MAX_STALL_CHECKS:
                break
            # The objective has flattened to within roundoff but the
            # certificate has not.  For p > 2 the plain reweighting map is
            # locally expanding (rate p - 2) and can settle into a tiny
            # period-2 orbit around the minimizer, so continue with the
            # damped map, which contracts at rate 1 - 2/p.
            if p > 2.0:
                theta0 = min(theta0, 2.0 / p)

    if not converged and not math.isfinite(kkt):
        kkt = _stationarity_residual(basis, rule, p, s, P, exact_denominators=False)
        converged = kkt <= tol
    return report(c, s, iters, eps_levels[level] if p < 2.0 else 0.0, kkt, converged)


# --------------------------------------------------------------------------
# public solves
# --------------------------------------------------------------------------

def _prepare(rule: QuadratureRule, p: float, degree: Optional[int]) -> tuple[float, Basis]:
    p = check_exponent(p)
    if degree is None:
        degree = default_degree(rule)
    basis = monomial_basis(rule, degree)
    return p, basis


def _inside(rule: QuadratureRule, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if not contains(rule.domain, z):
        raise DomainError(f"point {z} is not inside the domain")
    return z


def solve_point_minimizer(
    rule: QuadratureRule,
    p: float,
    z,
    degree: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> SolveReport:
    """Minimize the L^p norm among span elements equal to 1 at z.

    The optimal value is the p-th root of the reciprocal kernel at z;
    the minimizer evaluated elsewhere gives the two-point kernel data.
    """
    p, basis = _prepare(rule, p, degree)
    z = _inside(rule, z)
    A = point_rows(basis, [z])
    b = np.array([1.0 + 0.0j])
    return _minimize(basis, rule, p, A, b, initial=initial, tol=tol)


def kernel_diag(
    rule: QuadratureRule,
    p: float,
    z,
    degree: Optional[int] = None,
    method: str = "variational",
) -> float:
    """Diagonal kernel value at z.

    method "variational" inverts the point-minimizer norm; "sup" rescales
    the same minimizer to unit norm and reads off |f(z)|^p, which must
    agree by homogeneity; "series" sums |phi_r(z)|^2 over the orthonormal
    basis and is valid only at p = 2, where the two routes must agree.
    """
    if method == "series":
        p = check_exponent(p)
        if abs(p - 2.0) > 1e-14:
            raise ParameterError("the series route to the kernel needs p = 2")
        if degree is None:
            degree = default_degree(rule)
        basis = monomial_basis(rule, degree)
        z = _inside(rule, z)
        row = point_rows(basis, [z])[0]
        return float(np.sum(np.abs(row) ** 2))
    if method not in ("variational", "sup"):
        raise ParameterError(f"unknown kernel method {method!r}")
    rep = solve_point_minimizer(rule, p, z, degree=degree)
    if method == "sup":
        norm = lp_norm(rep.minimizer, rule, p)
        value = evaluate(rep.minimizer, _inside(rule, z))
        return float(np.abs(value) ** p / norm**p)
    return rep.optimal_value ** (-p)


def offdiagonal(
    rule: QuadratureRule,
    p: float,
    z,
    w,
    degree: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> OffDiagonalResult:
    """Two-point kernel data at (z, w).

    Solves the point problem at w and evaluates its minimizer at z;
    the kernel value is that number times the diagonal kernel at w.
    No symmetry in (z, w) is assumed anywhere.
    """
    rep = solve_point_minimizer(rule, p, w, degree=degree, initial=initial, tol=tol)
    z = _inside(rule, z)
    m_value = evaluate(rep.minimizer, z)
    kernel_value = m_value * rep.optimal_value ** (-p)
    return OffDiagonalResult(m_value=m_value, kernel_value=kernel_value, report=rep)


def _gradient_row(basis: Basis, z, X) -> np.ndarray:
    n = basis.dimension
    X = np.asarray(X, dtype=complex).reshape(n)
    row = np.zeros(basis.size, dtype=complex)
    for j in range(n):
        order = tuple(1 if i == j else 0 for i in range(n))
        row += X[j] * derivative_rows(basis, z, order)
    return row


def solve_metric(
    rule: QuadratureRule,
    p: float,
    z,
    X,
    degree: Optional[int] = None,
    tol: Optional[float] = None,
) -> MetricResult:
    """Metric value at z in direction X.

    Ratio of the point-minimizer norm at z to the optimal norm among
    span elements vanishing at z with directional derivative 1 along X.
    """
    p, basis = _prepare(rule, p, degree)
    if basis.max_degree < 1:
        raise ParameterError("the metric needs a basis of degree at least 1")
    z = _inside(rule, z)
    X = np.asarray(X, dtype=complex).reshape(basis.dimension)
    if not np.any(X != 0):
        raise ParameterError("direction X must be nonzero")
    point_rep = _minimize(
        basis, rule, p, point_rows(basis, [z]), np.array([1.0 + 0.0j]), tol=tol
    )
    A = np.vstack([point_rows(basis, [z]), _gradient_row(basis, z, X)[None, :]])
    b = np.array([0.0 + 0.0j, 1.0 + 0.0j])
    deriv_rep = _minimize(basis, rule, p, A, b, tol=tol)
    return MetricResult(
        value=point_rep.optimal_value / deriv_rep.optimal_value,
        point_report=point_rep,
        derivative_report=deriv_rep,
    )


def solve_high_order(
    rule: QuadratureRule,
    p: float,
    z,
    alpha: MultiIndex,
    degree: Optional[int] = None,
    tol: Optional[float] = None,
) -> SolveReport:
    """Graded higher-order minimizer at z.

    Minimizes the L^p norm among span elements whose derivatives of
    graded order below alpha all vanish at z while the alpha derivative
    equals 1.  The zero multi-index reduces to the point problem.
    """
    p, basis = _prepare(rule, p, degree)
    z = _inside(rule, z)
    n = basis.dimension
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise ParameterError(f"multi-index {alpha!r} invalid for dimension {n}")
    if sum(alpha) > basis.max_degree:
        raise ParameterError("basis degree too small for the requested derivative")
    total = sum(alpha)
    if n == 1:
        below = [(a,) for a in range(total + 1)]
    else:
        below = [(a, b2) for a in range(total + 1) for b2 in range(total + 1 - a)]
    below = sorted(
        (beta for beta in below if graded_key(beta) <= graded_key(alpha)),
        key=graded_key,
    )
    A = np.vstack([derivative_rows(basis, z, beta)[None, :] for beta in below])
    b = np.zeros(len(below), dtype=complex)
    b[-1] = 1.0
    return _minimize(basis, rule, p, A, b, tol=tol)


def project_lp(
    rule: QuadratureRule,
    p: float,
    target,
    degree: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> ProjectionResult:
    """Best L^p approximation of a node function from the span.

    target is a complex array over the rule's nodes, or a callable
    mapping the (node_count, n) node array to values.  Needs p > 1: at
    p = 1 the nearest point may not be unique.
    """
    p = check_exponent(p)
    if p <= 1.0 + 1e-12:
        raise UnsupportedExponentError("metric projection needs p > 1")
    if degree is None:
        degree = default_degree(rule)
    basis = monomial_basis(rule, degree)
    values = target(rule.nodes) if callable(target) else target
    values = np.asarray(values, dtype=complex).reshape(-1)
    rep = _minimize(basis, rule, p, None, None, target=values, initial=initial, tol=tol)
    return ProjectionResult(
        projection=rep.minimizer, distance=rep.optimal_value, report=rep
    )
