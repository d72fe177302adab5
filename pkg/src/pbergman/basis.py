"""Truncated monomial bases and polynomial operations on quadrature grids.

The working basis consists of the monomials z^alpha with |alpha| up to a
fixed degree, listed in graded order (total degree first, then
lexicographic ties broken toward earlier variables) and scaled to unit
L^2 norm on the domain.  All coefficient vectors in this package refer
to these normalized elements.

Grid evaluation and the weighted Gram/moment assembly exploit the polar
tensor structure: angular sums collapse to FFT bins and the remaining
radial contractions are small dense einsums.  Both paths reproduce the
plain node-by-node sums exactly (up to roundoff); they are
reassociations, not approximations.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import fft as sfft
from scipy.special import poch

from .domains import QuadratureRule
from .errors import ParameterError, UnsupportedExponentError

MultiIndex = tuple  # tuple of nonnegative ints, one per complex variable

MAX_DEGREE = 40
P_MIN, P_MAX = 1.0, 64.0

_fft_workers = int(os.environ.get("PBERGMAN_THREADS", "0") or 0) or None


def set_fft_workers(count) -> None:
    """Set the worker count for the FFT passes (None = scipy default)."""
    global _fft_workers
    _fft_workers = None if not count else int(count)


def check_exponent(p: float) -> float:
    """Validate the integrability exponent; return it as a float."""
    p = float(p)
    if not (P_MIN <= p <= P_MAX) or not math.isfinite(p):
        raise UnsupportedExponentError(
            f"exponent p={p!r} outside the supported range [{P_MIN:g}, {P_MAX:g}]"
        )
    return p


def graded_key(alpha: MultiIndex) -> tuple:
    """Sort key for the graded order on multi-indices."""
    return (sum(alpha), tuple(-a for a in alpha))


# --------------------------------------------------------------------------
# basis and polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Basis:
    """Monomials of total degree <= max_degree in graded order.

    norm2[r] is the L^2 norm of z^indices[r] over the domain of the rule
    the basis was built from; the r-th basis element is
    z^indices[r] / norm2[r].  powers is indices as an (N, n) int array.
    """

    indices: tuple
    norm2: np.ndarray
    max_degree: int
    dimension: int
    powers: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class PolyFun:
    """A polynomial as coefficients over the normalized basis elements."""

    basis: Basis
    coefficients: np.ndarray

    def __call__(self, z):
        return evaluate(self, z)


def monomial_basis(rule: QuadratureRule, max_degree: int) -> Basis:
    """Build the normalized monomial basis on the rule's domain.

    Parameters
    ----------
    rule : QuadratureRule
        Supplies the domain and the moments for the normalization.  Its
        angular order must be at least 4*max_degree + 4, which keeps the
        grid exact for the degree-2*max_degree products that appear in
        quartic objectives and Gram assembly.
    max_degree : int
        Total-degree cutoff, between 0 and 40.

    Returns
    -------
    Basis
    """
    if not isinstance(max_degree, (int, np.integer)) or not (0 <= max_degree <= MAX_DEGREE):
        raise ParameterError(f"max_degree must be an integer in [0, {MAX_DEGREE}], got {max_degree!r}")
    if rule.angular_order < 4 * max_degree + 4:
        raise ParameterError(
            f"angular_order {rule.angular_order} too small for degree {max_degree}; "
            f"need at least {4 * max_degree + 4}"
        )
    n = rule.domain.dimension
    if n == 1:
        indices = [(a,) for a in range(max_degree + 1)]
    else:
        indices = [
            (a, b)
            for a in range(max_degree + 1)
            for b in range(max_degree + 1 - a)
        ]
    indices.sort(key=graded_key)
    powers = np.array(indices, dtype=int).reshape(len(indices), n)
    e1 = powers[:, 0]
    e2 = powers[:, 1] if n == 2 else np.zeros_like(e1)
    norm2 = np.sqrt(rule.tensor.modulus_products(2 * e1, 2 * e2))
    return Basis(
        indices=tuple(indices),
        norm2=norm2,
        max_degree=int(max_degree),
        dimension=n,
        powers=powers,
    )


def _split_powers(basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    a = basis.powers[:, 0]
    b = basis.powers[:, 1] if basis.dimension == 2 else np.zeros_like(a)
    return a, b


def _raw_coefficient_grid(f: PolyFun) -> np.ndarray:
    """Dense plain-monomial coefficient grid C with f = sum C[a(,b)] z^alpha."""
    basis = f.basis
    D = basis.max_degree
    raw = np.asarray(f.coefficients, dtype=complex) / basis.norm2
    a, b = _split_powers(basis)
    if basis.dimension == 1:
        C = np.zeros(D + 1, dtype=complex)
        C[a] = raw
    else:
        C = np.zeros((D + 1, D + 1), dtype=complex)
        C[a, b] = raw
    return C


def evaluate(f: PolyFun, z):
    """Evaluate a polynomial at one point (n,) or a batch (m, n).

    Horner evaluation on the plain-monomial form.  Returns a scalar for
    a single point, else an (m,) array.
    """
    n = f.basis.dimension
    pts = np.asarray(z, dtype=complex)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != n:
        raise ParameterError(f"points have {pts.shape[1]} coordinates, basis has {n}")
    C = _raw_coefficient_grid(f)
    if n == 1:
        vals = npoly.polyval(pts[:, 0], C)
    else:
        vals = npoly.polyval2d(pts[:, 0], pts[:, 1], C)
    return complex(vals[0]) if single else vals


def derivative_rows(basis: Basis, z, order: MultiIndex) -> np.ndarray:
    """Values of the mixed derivative d^order of each basis element at z.

    Returns a length-N complex vector; order is a multi-index of
    nonnegative integers (all zeros gives plain point evaluation).
    """
    n = basis.dimension
    z = np.asarray(z, dtype=complex).reshape(n)
    order = tuple(int(o) for o in order)
    if len(order) != n or any(o < 0 for o in order):
        raise ParameterError(f"derivative order {order!r} invalid for dimension {n}")
    a, b = _split_powers(basis)
    o1 = order[0]
    o2 = order[1] if n == 2 else 0
    # Falling factorials a!/(a-o)!, zero whenever a < o.
    fall = poch(a - o1 + 1.0, o1) * poch(b - o2 + 1.0, o2)
    row = fall.astype(complex)
    row *= np.where(a >= o1, z[0] ** np.maximum(a - o1, 0), 0.0)
    if n == 2:
        row *= np.where(b >= o2, z[1] ** np.maximum(b - o2, 0), 0.0)
    return row / basis.norm2


def point_rows(basis: Basis, points) -> np.ndarray:
    """Matrix of normalized basis values at points, shape (m, N)."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[1] != basis.dimension:
        raise ParameterError(
            f"points have {pts.shape[1]} coordinates, basis has {basis.dimension}"
        )
    a, b = _split_powers(basis)
    rows = pts[:, 0][:, None] ** a[None, :]
    if basis.dimension == 2:
        rows = rows * pts[:, 1][:, None] ** b[None, :]
    return rows / basis.norm2[None, :]


def directional_derivative(f: PolyFun, z, X) -> complex:
    """Complex directional derivative sum_j X_j df/dz_j at z, exactly."""
    n = f.basis.dimension
    X = np.asarray(X, dtype=complex).reshape(n)
    total = 0.0 + 0.0j
    for j in range(n):
        order = tuple(1 if i == j else 0 for i in range(n))
        total += X[j] * (derivative_rows(f.basis, z, order) @ f.coefficients)
    return complex(total)


# --------------------------------------------------------------------------
# grid evaluation and weighted assembly (FFT over the angles)
# --------------------------------------------------------------------------

def sample_at_nodes(f: PolyFun, rule: QuadratureRule) -> np.ndarray:
    """Values of f at every quadrature node, in node order.

    Fast path: scatter the coefficients into an (R1, R2, M1, M2) array
    of angular Fourier amplitudes and run one inverse FFT2.  This equals
    Horner evaluation at the nodes to roundoff whenever the angular
    orders exceed the degree; otherwise it falls back to Horner.
    """
    basis = f.basis
    g = rule.tensor
    if basis.dimension != rule.domain.dimension:
        raise ParameterError("basis and rule dimensions differ")
    D = basis.max_degree
    if g.M1 <= D or (basis.dimension == 2 and g.M2 <= D):
        return evaluate(f, rule.nodes)
    a, b = _split_powers(basis)
    raw = np.asarray(f.coefficients, dtype=complex) / basis.norm2
    # Amplitude of the (a, b) angular mode at radial point (i, k).
    P = raw[None, :] * g.m1[:, None] ** a[None, :] * g.g1[:, None] ** b[None, :]
    S = g.s2[:, None] ** b[None, :]
    amp = np.einsum("ir,kr->ikr", P, S)
    A = np.zeros((g.m1.size, g.s2.size, g.M1, g.M2), dtype=complex)
    A[:, :, a, b] = amp
    vals = g.M1 * g.M2 * sfft.ifft2(A, axes=(-2, -1), workers=_fft_workers)
    return vals.reshape(-1)


def lp_norm(f: PolyFun, rule: QuadratureRule, p: float) -> float:
    """The L^p norm (sum of w |f|^p)^(1/p) over the rule's nodes."""
    p = check_exponent(p)
    vals = np.abs(sample_at_nodes(f, rule))
    return float((rule.weights @ vals ** p) ** (1.0 / p))


def _angular_spectrum(rule: QuadratureRule, values: np.ndarray) -> np.ndarray:
    g = rule.tensor
    arr = np.asarray(values).reshape(g.m1.size, g.s2.size, g.M1, g.M2)
    return sfft.fft2(arr, axes=(2, 3), workers=_fft_workers)


def weighted_gram(basis: Basis, rule: QuadratureRule, density: np.ndarray) -> np.ndarray:
    """Hermitian matrix sum_q w_q density_q conj(phi_r(q)) phi_c(q).

    density is a real node array (quadrature weights are applied here,
    do not fold them in).  The angular sums are read off FFT bins of the
    density; the radial sums contract against small power tables.  The
    result is symmetrized to remove roundoff skew.
    """
    g = rule.tensor
    D = basis.max_degree
    Dv = D if basis.dimension == 2 else 0
    F = _angular_spectrum(rule, density)
    mu = np.arange(-D, D + 1)
    nu = np.arange(-Dv, Dv + 1)
    W = F[:, :, (-mu) % g.M1][:, :, :, (-nu) % g.M2]
    # Radial contractions: first the s factor, then g1 powers, then m1.
    Q = np.arange(2 * Dv + 1)
    S2w = g.wr2[:, None] * g.s2[:, None] ** Q[None, :]
    V = np.einsum("kQ,ikuv->iQuv", S2w, W)
    V *= (g.g1[:, None] ** Q[None, :])[:, :, None, None]
    Pp = np.arange(2 * D + 1)
    M1P = g.wr1[:, None] * g.m1[:, None] ** Pp[None, :]
    U = np.einsum("iP,iQuv->PQuv", M1P, V)
    a, b = _split_powers(basis)
    Pi = a[:, None] + a[None, :]
    Qi = b[:, None] + b[None, :]
    Ui = a[None, :] - a[:, None] + D
    Vi = b[None, :] - b[:, None] + Dv
    G = g.wang * U[Pi, Qi, Ui, Vi] / (basis.norm2[:, None] * basis.norm2[None, :])
    return (G + G.conj().T) / 2.0


def weighted_moments(
    basis: Basis,
    rule: QuadratureRule,
    psi: np.ndarray,
    conjugate_basis: bool = True,
) -> np.ndarray:
    """Vector of sums w_q psi_q conj(phi_r(q)), or w_q psi_q phi_r(q).

    psi is a complex node array without quadrature weights.  With
    conjugate_basis=True this is the L^2 projection data of psi onto the
    basis; with False it pairs psi against the unconjugated elements, as
    in stationarity sums.
    """
    g = rule.tensor
    D = basis.max_degree
    Dv = D if basis.dimension == 2 else 0
    F = _angular_spectrum(rule, psi)
    aa = np.arange(D + 1)
    bb = np.arange(Dv + 1)
    if conjugate_basis:
        idx1, idx2 = aa % g.M1, bb % g.M2
    else:
        idx1, idx2 = (-aa) % g.M1, (-bb) % g.M2
    Wm = F[:, :, idx1][:, :, :, idx2]
    S2b = g.wr2[:, None] * g.s2[:, None] ** bb[None, :]
    E = np.einsum("kb,ikab->iab", S2b, Wm)
    M1A = g.wr1[:, None] * g.m1[:, None] ** aa[None, :]
    G1B = g.g1[:, None] ** bb[None, :]
    T = np.einsum("ia,ib,iab->ab", M1A, G1B, E)
    a, b = _split_powers(basis)
    return g.wang * T[a, b] / basis.norm2
