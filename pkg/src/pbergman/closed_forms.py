"""Exact reference values on the model domains.

Everything here is a closed-form evaluation, independent of quadrature
and of the variational solver, so these functions serve as oracles for
the numeric routes.  Complex powers use principal branches throughout;
the preconditions keep every base inside the right half-plane for the
parameter ranges we accept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "BallAutomorphism",
    "ball_automorphism_apply",
    "ball_kernel",
    "caratheodory_reference",
    "polydisc_kernel",
    "thullen_k2_series",
    "thullen_k2_slice",
    "thullen_zero",
]


def _as_point(z, n: int) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (n,):
        raise ParameterError(f"expected a point with {n} coordinates, got shape {z.shape}")
    return z


def _check_p(p: float) -> float:
    p = float(p)
    if p < 1.0:
        raise ParameterError(f"p = {p} is below 1")
    return p


def ball_kernel(n: int, p: float, z, w) -> complex:
    """Two-point kernel of the unit ball in C^n.

    (n!/pi^n) (1 - |w|^2)^{(n+1)(2/p - 1)} / (1 - <z, w>)^{2(n+1)/p},
    where <z, w> = sum z_j conj(w_j).  On the diagonal the exponents
    collapse to -(n+1) and the value no longer depends on p.
    """
    p = _check_p(p)
    z = _as_point(z, n)
    w = _as_point(w, n)
    zz = float(np.sum(np.abs(z) ** 2))
    ww = float(np.sum(np.abs(w) ** 2))
    if zz >= 1.0 or ww >= 1.0:
        raise DomainError("ball_kernel needs both points inside the unit ball")
    pairing = complex(np.sum(z * np.conj(w)))
    lead = math.factorial(n) / math.pi**n
    return (
        lead
        * (1.0 - ww) ** ((n + 1) * (2.0 / p - 1.0))
        * (1.0 - pairing) ** (-2.0 * (n + 1) / p)
    )


def polydisc_kernel(n: int, p: float, z, w) -> complex:
    """Two-point kernel of the unit polydisc in C^n.

    Product over coordinates of
    (1/pi) (1 - |w_j|^2)^{4/p - 2} (1 - conj(w_j) z_j)^{-4/p}.
    """
    p = _check_p(p)
    z = _as_point(z, n)
    w = _as_point(w, n)
    if np.max(np.abs(z)) >= 1.0 or np.max(np.abs(w)) >= 1.0:
        raise DomainError("polydisc_kernel needs both points inside the unit polydisc")
    value = complex(1.0)
    for zj, wj in zip(z, w):
        value *= (
            (1.0 / math.pi)
            * (1.0 - abs(wj) ** 2) ** (4.0 / p - 2.0)
            * (1.0 - np.conj(wj) * zj) ** (-4.0 / p)
        )
    return value


def _thullen_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if alpha <= 0.0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return alpha


def thullen_k2_slice(alpha: float, x: complex) -> complex:
    """p = 2 kernel of {|z1| + |z2|^(2/alpha) < 1} along the first axis.

    The value K_2((z1^2, 0), (w1^2, 0)) depends only on x = z1 conj(w1):

        ((alpha+1) / (4 pi^2 x)) [(1-x)^-(alpha+2) - (1+x)^-(alpha+2)].

    The bracket vanishes linearly at x = 0; below |x| = 1e-3 we switch
    to the even Taylor series of the quotient, whose first six terms
    leave a remainder far under double precision there.
    """
    alpha = _thullen_alpha(alpha)
    x = complex(x)
    if abs(x) >= 1.0:
        raise DomainError("thullen_k2_slice needs |x| < 1")
    beta = alpha + 2.0
    if abs(x) < 1e-3:
        # ((alpha+1)/(2 pi^2)) sum_j rising(beta, 2j+1)/(2j+1)! x^(2j)
        total = 0.0j
        rising = beta  # rising(beta, 1)
        fact = 1.0  # (2j+1)!
        xx = complex(1.0)
        for j in range(6):
            total += rising / fact * xx
            rising *= (beta + 2 * j + 1) * (beta + 2 * j + 2)
            fact *= (2 * j + 2) * (2 * j + 3)
            xx *= x * x
        return (alpha + 1.0) / (2.0 * math.pi**2) * total
    bracket = (1.0 - x) ** (-beta) - (1.0 + x) ** (-beta)
    return (alpha + 1.0) / (4.0 * math.pi**2 * x) * bracket


def thullen_k2_series(alpha: float, x: complex, tol: float = 1e-16) -> complex:
    """Monomial-series route to the same slice value.

    Sums x^(2a) / ||zeta1^a||^2 with the squared norms given by Beta
    moments, 2 pi^2 Gamma(2a+2) Gamma(alpha+1) / Gamma(2a+alpha+3).
    Independent of the rational closed form, hence usable as its oracle.
    """
    alpha = _thullen_alpha(alpha)
    x = complex(x)
    if abs(x) >= 1.0:
        raise DomainError("thullen_k2_series needs |x| < 1")
    lg_alpha = math.lgamma(alpha + 1.0)
    total = 0.0j
    for a in range(100000):
        lognorm2 = math.log(2.0 * math.pi**2) + math.lgamma(2 * a + 2) + lg_alpha
        lognorm2 -= math.lgamma(2 * a + alpha + 3.0)
        term = x ** (2 * a) * math.exp(-lognorm2)
        total += term
        if a > 4 and abs(term) < tol * max(abs(total), 1.0):
            return total
    raise ParameterError(f"series for x = {x} did not settle; |x| too close to 1")


def thullen_zero(alpha: float) -> complex:
    """Location of the slice kernel's zero, i tan(pi / (alpha + 2)).

    Rewrites (e^(2 pi i/(alpha+2)) - 1)/(e^(2 pi i/(alpha+2)) + 1) in
    real form.  A zero inside the slice exists only for alpha > 2.
    """
    alpha = float(alpha)
    if alpha <= 2.0:
        raise ParameterError(f"the slice kernel has no interior zero for alpha = {alpha}")
    return 1j * math.tan(math.pi / (alpha + 2.0))


def caratheodory_reference(kind: str, z, X) -> float:
    """Classical Caratheodory metric on the disc or the ball.

    Disc: |X| / (1 - |z|^2).  Ball, any dimension: the automorphism
    reduction gives
    sqrt(|X|^2 (1 - |z|^2) + |<X, z>|^2) / (1 - |z|^2).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    if z.shape != X.shape:
        raise ParameterError("z and X must have matching shapes")
    if kind == "disc":
        if z.shape != (1,):
            raise ParameterError("disc points are one-dimensional")
        if abs(z[0]) >= 1.0:
            raise DomainError("point outside the disc")
        return float(abs(X[0]) / (1.0 - abs(z[0]) ** 2))
    if kind == "ball":
        zz = float(np.sum(np.abs(z) ** 2))
        if zz >= 1.0:
            raise DomainError("point outside the ball")
        pairing = complex(np.sum(X * np.conj(z)))
        xx = float(np.sum(np.abs(X) ** 2))
        return math.sqrt(xx * (1.0 - zz) + abs(pairing) ** 2) / (1.0 - zz)
    raise ParameterError(f"no Caratheodory reference for kind {kind!r}")


@dataclass(frozen=True)
class BallAutomorphism:
    """Automorphism of the unit ball in C^n moving (a, 0, ..., 0) to 0."""

    a: complex
    dimension: int

    def __post_init__(self):
        if abs(self.a) >= 1.0:
            raise ParameterError(f"automorphism parameter must satisfy |a| < 1, got {self.a}")
        if self.dimension < 1:
            raise ParameterError("dimension must be at least 1")


def ball_automorphism_apply(F: BallAutomorphism, z) -> tuple[np.ndarray, complex]:
    """Image point and complex Jacobian determinant of F at z.

    First coordinate maps by the Moebius factor (z1 - a)/(1 - conj(a) z1);
    the remaining ones are scaled by sqrt(1 - |a|^2)/(1 - conj(a) z1).
    The determinant collapses to
    (1 - |a|^2)^((n+1)/2) / (1 - conj(a) z1)^(n+1).
    """
    n = F.dimension
    z = _as_point(z, n)
    if float(np.sum(np.abs(z) ** 2)) >= 1.0:
        raise DomainError("ball_automorphism_apply needs a point inside the ball")
    a = complex(F.a)
    denom = 1.0 - np.conj(a) * z[0]
    image = np.empty(n, dtype=complex)
    image[0] = (z[0] - a) / denom
    if n > 1:
        image[1:] = math.sqrt(1.0 - abs(a) ** 2) * z[1:] / denom
    jacobian = (1.0 - abs(a) ** 2) ** ((n + 1) / 2.0) / denom ** (n + 1)
    return image, complex(jacobian)
