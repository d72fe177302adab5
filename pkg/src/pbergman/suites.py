"""Named verification batteries behind the verify command.

Each suite runs a fixed set of checks against oracles and returns the
records; nothing here writes files.  A suite takes a log callable for
progress lines, so the CLI can stream them while library callers stay
silent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import closed_forms, lab
from .domains import build_quadrature, make_domain, volume
from .errors import ParameterError
from .solver import kernel_diag, offdiagonal, project_lp, solve_metric

__all__ = ["SUITE_NAMES", "SuiteRecord", "run_suite"]


@dataclass(frozen=True)
class SuiteRecord:
    """One suite line: what was checked and how it came out."""

    suite: str
    label: str
    passed: bool
    margin: float
    note: str = ""


class _Recorder:
    def __init__(self, suite: str, log: Optional[Callable[[str], None]]):
        self.suite = suite
        self.log = log
        self.records = []

    def add(self, label: str, passed: bool, margin: float, note: str = ""):
        self.records.append(SuiteRecord(self.suite, label, bool(passed), float(margin), note))
        if self.log is not None:
            verdict = "pass" if passed else "FAIL"
            extra = f" ({note})" if note else ""
            self.log(f"[{self.suite}] {label}: {verdict} margin={margin:.3e}{extra}")

    def check(self, label: str, result) -> None:
        note = result.note
        if not result.conclusive:
            note = (note + "; " if note else "") + "inconclusive"
        self.add(label, result.passed, result.margin, note)


# --------------------------------------------------------------------------
# inequalities
# --------------------------------------------------------------------------

def _random_complex(rng, count: int, box: float = 3.0) -> np.ndarray:
    return rng.uniform(-box, box, count) + 1j * rng.uniform(-box, box, count)


def suite_inequalities(samples: int = 100_000, seed: int = lab.DEFAULT_SEED, log=None):
    """Scalar inequality branches and the basic identity on random triples."""
    rec = _Recorder("inequalities", log)
    rng = np.random.default_rng(seed)
    branches = (
        (1, lambda: rng.uniform(2.0, 8.0)),
        (2, lambda: rng.uniform(1.0, 2.0)),
        (3, lambda: 2.0 + rng.uniform(1e-9, 6.0)),
        (4, lambda: 1.0 + rng.uniform(1e-9, 1.0)),
        (5, lambda: 1.0),
    )
    for which, draw_p in branches:
        a_vals = _random_complex(rng, samples)
        b_vals = _random_complex(rng, samples)
        if which in (1, 3):
            a_vals[: samples // 100] = 0.0
        worst = math.inf
        failures = 0
        for a, b in zip(a_vals, b_vals):
            p = draw_p()
            if which == 2 and p == 1.0 and (a == 0 or b == 0):
                continue
            if which == 5 and a == 0:
                continue
            got = lab.check_elementary_inequality(which, a, b, p)
            worst = min(worst, got.margin)
            failures += not got.passed
        rec.add(
            f"branch {which} on {samples} triples",
            failures == 0, worst, note=f"{failures} failures",
        )
    worst = math.inf
    failures = 0
    for _ in range(samples):
        r1, r2 = rng.uniform(0.1, 3.0, 2)
        t1, t2 = rng.uniform(0.0, 2.0 * math.pi, 2)
        p = rng.uniform(1.0, 6.0)
        got = lab.check_basic_identity(r1 * np.exp(1j * t1), r2 * np.exp(1j * t2), p)
        worst = min(worst, got.tolerance - got.margin)
        failures += not got.passed
    rec.add(f"basic identity on {samples} triples", failures == 0, worst,
            note=f"{failures} failures")
    return rec.records


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

def suite_kernels(seed: int = lab.DEFAULT_SEED, log=None):
    """Closed-form agreement, origin values, power and product structure."""
    rec = _Recorder("kernels", log)
    disc = build_quadrature(make_domain("disc"), 40, 84)
    ball = build_quadrature(make_domain("ball", 2), 16, 52)

    for p in (1.0, 2.0, 4.0):
        for z in (0.4, 0.5 * np.exp(2.2j)):
            got = kernel_diag(disc, p, [z], degree=20)
            want = float(np.real(closed_forms.ball_kernel(1, p, [z], [z])))
            gap = abs(got - want) / want
            rec.add(f"disc diagonal p={p} |z|={abs(z):.2f}", gap <= 1e-6, 1e-6 - gap)
        zb = [0.2, 0.1 - 0.2j]
        got = kernel_diag(ball, p, zb, degree=12)
        want = float(np.real(closed_forms.ball_kernel(2, p, zb, zb)))
        gap = abs(got - want) / want
        rec.add(f"ball diagonal p={p}", gap <= 1e-6, 1e-6 - gap)

    for p in (2.0, 4.0):
        z, w = [0.2 * np.exp(0.3j)], [0.4]
        got = offdiagonal(disc, p, z, w, degree=20).kernel_value
        want = closed_forms.ball_kernel(1, p, z, w)
        gap = abs(got - want) / abs(want)
        rec.add(f"disc off-diagonal p={p}", gap <= 1e-6, 1e-6 - gap)

    domains = {
        "disc": (disc, 20),
        "bidisc": (build_quadrature(make_domain("polydisc", 2), 28, 60), 14),
        "ball": (ball, 12),
        "thullen a=3": (build_quadrature(make_domain("thullen", alpha=3.0), 20, 44), 10),
    }
    for name, (rule, degree) in domains.items():
        want = 1.0 / volume(rule.domain)
        origin = [0.0] * rule.domain.dimension
        for p in (1.0, 2.0, 4.0):
            got = kernel_diag(rule, p, origin, degree=degree)
            gap = abs(got - want) / want
            rec.add(f"origin kernel {name} p={p}", gap <= 1e-8, 1e-8 - gap)

    rec.check("power relation disc p=2 k=2",
              lab.check_power_relation(disc, 2.0, 2, [0.3], degree=20))
    thullen = domains["thullen a=3"][0]
    rec.check("power relation thullen origin",
              lab.check_power_relation(thullen, 2.0, 2, [0.0, 0.0], degree=10))

    aut = closed_forms.BallAutomorphism(a=0.3 + 0.1j, dimension=1)
    for p in (2.0, 4.0):
        rec.check(
            f"disc transformation rules p={p}",
            lab.check_transformation_rules(disc, p, aut, [0.2], [-0.1 + 0.3j], degree=20),
        )
    # closed-form route for the p=2 two-point law
    z, w = np.array([0.25 + 0.1j]), np.array([-0.2j])
    fz, jz = closed_forms.ball_automorphism_apply(aut, z)
    fw, jw = closed_forms.ball_automorphism_apply(aut, w)
    left = closed_forms.ball_kernel(1, 2.0, z, w)
    right = closed_forms.ball_kernel(1, 2.0, fz, fw) * jz * np.conj(jw)
    gap = abs(left - right) / abs(left)
    rec.add("disc p=2 two-point law, closed forms", gap <= 1e-12, 1e-12 - gap)

    bidisc_small = build_quadrature(make_domain("polydisc", 2), 16, 36)
    rec.check(
        "bidisc product rule p=3",
        lab.check_product_rule(disc, bidisc_small, 3.0, 0.3, -0.2 + 0.2j, degree=8),
    )

    rng = np.random.default_rng(seed)
    pool = lab.sample_interior_points(disc.domain, 6, rng, cap=0.6)
    for p in (1.5, 3.0):
        cache = lab.MinimizerCache(disc, p, degree=20)
        worst_h = math.inf
        worst_gap = math.inf
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                z, w = pool[i], pool[j]
                worst_h = min(worst_h, lab.kernel_pair_gap(disc, p, z, w, cache=cache))
                holder = lab.check_holder_offdiag(disc, p, z, w, cache=cache)
                worst_gap = min(worst_gap, holder.margin)
        rec.add(f"pair gap nonnegative p={p} over {len(pool)} pooled points",
                worst_h >= -1e-8, worst_h)
        rec.add(f"two-point bound p={p} over pooled pairs", worst_gap >= -1e-8, worst_gap)
    return rec.records


# --------------------------------------------------------------------------
# metric
# --------------------------------------------------------------------------

def suite_metric(log=None):
    """Origin metric law on the disc and the large-p limit direction."""
    rec = _Recorder("metric", log)
    disc = build_quadrature(make_domain("disc"), 40, 84)
    values = []
    for p in (2.0, 4.0, 8.0, 16.0):
        got = solve_metric(disc, p, [0.0], [1.0], degree=20).value
        want = ((p + 2.0) / 2.0) ** (1.0 / p)
        values.append(got)
        rec.add(f"metric origin p={p}", abs(got - want) <= 1e-6, 1e-6 - abs(got - want),
                note=f"value {got:.9f}")
    drops = np.diff(values)
    rec.add("metric origin strictly decreasing", bool(np.all(drops < 0)), float(-drops.max()))
    limit = closed_forms.caratheodory_reference("disc", [0.0], [1.0])
    rec.add("metric stays above the p->infinity limit", values[-1] >= limit,
            values[-1] - limit, note=f"limit {limit}")
    return rec.records


# --------------------------------------------------------------------------
# levi
# --------------------------------------------------------------------------

def suite_levi(log=None):
    """Levi form of log K_p against the squared metric floors on the disc."""
    rec = _Recorder("levi", log)
    disc = build_quadrature(make_domain("disc"), 40, 84)
    for z in (0.0, 0.3):
        for p in (2.0, 3.0, 4.0):
            got = lab.check_levi_bounds(disc, p, [z], [1.0], degree=20)
            rec.check(f"levi bound p={p} z={z}", got)
            if p == 2.0 and z == 0.0:
                eq_gap = abs(np.real(got.rhs) - np.real(got.lhs))
                rec.add("levi equality at the origin for p=2", eq_gap <= 1e-2,
                        1e-2 - eq_gap)
        for p in (1.0, 1.5):
            rec.check(f"levi bound p={p} z={z}",
                      lab.check_levi_bounds(disc, p, [z], [1.0], degree=20))
    return rec.records


# --------------------------------------------------------------------------
# stability in p
# --------------------------------------------------------------------------

def suite_stability(log=None):
    """Monotone scaled kernel and the left-limit trend on the Thullen domain."""
    rec = _Recorder("stability", log)
    rule = build_quadrature(make_domain("thullen", alpha=3.0), 20, 44)
    z = [0.3, 0.2]
    table = lab.p_scan(rule, z, [1.2, 1.5, 2.0, 2.5, 3.0, 4.0], degree=10)
    rec.add("scaled kernel nonincreasing on thullen a=3",
            table.metadata["scaled_kernel_nonincreasing"],
            float(-np.max(np.diff(table.columns["scaled_kernel"]))))
    rec.add("all scan solves converged", table.metadata["all_converged"], 0.0)

    k2 = kernel_diag(rule, 2.0, z, degree=10)
    gaps = []
    for h in (0.2, 0.1, 0.05):
        gaps.append(abs(kernel_diag(rule, 2.0 - h, z, degree=10) - k2))
    shrinking = gaps[0] > gaps[1] > gaps[2]
    rec.add("left-limit gap shrinks with h", shrinking,
            float(min(gaps[0] - gaps[1], gaps[1] - gaps[2])),
            note="gaps " + ", ".join(f"{g:.3e}" for g in gaps))
    return rec.records


# --------------------------------------------------------------------------
# projection
# --------------------------------------------------------------------------

def suite_projection(log=None):
    """Conjugate-monomial projections, the nonlinearity witness, distances."""
    rec = _Recorder("projection", log)
    disc = build_quadrature(make_domain("disc"), 40, 84)

    def conj_power(k):
        return lambda nodes: np.conj(nodes[:, 0]) ** k

    for p in (1.5, 2.0, 4.0):
        for k in (1, 2):
            res = project_lp(disc, p, conj_power(k), degree=20)
            coeff = float(np.linalg.norm(res.projection.coefficients))
            rec.add(f"projection of conj(z)^{k} vanishes at p={p}", coeff <= 1e-7,
                    1e-7 - coeff)
            rec.add(f"projection residual p={p} k={k}",
                    res.report.kkt_residual <= 1e-8,
                    1e-8 - res.report.kkt_residual)

    rec.check("nonlinearity witness p=4 t=0.1",
              lab.check_projection_nonlinearity(disc, 4.0, 0.1))
    low = lab.check_projection_nonlinearity(disc, 1.5, 0.1)
    rec.add("witness flips sign below p=2", low.passed and np.real(low.rhs) < 0,
            float(-np.real(low.rhs)))

    scaled = []
    for p in (2.0, 3.0, 4.0):
        res = project_lp(disc, p, conj_power(1), degree=20)
        scaled.append(math.pi ** (-1.0 / p) * res.distance)
    steps = np.diff(scaled)
    rec.add("scaled distance nondecreasing in p", bool(np.all(steps >= -1e-8)),
            float(steps.min()), note="values " + ", ".join(f"{s:.6f}" for s in scaled))
    want = (math.pi / 3.0) ** 0.25
    got = project_lp(disc, 4.0, conj_power(1), degree=20).distance
    rec.add("distance of conj(z) at p=4", abs(got - want) <= 1e-8, 1e-8 - abs(got - want))
    return rec.records


# --------------------------------------------------------------------------
# thullen slice
# --------------------------------------------------------------------------

def suite_thullen(alpha: float = 3.0, log=None):
    """Slice formula versus the moment series, and the off-diagonal zero."""
    rec = _Recorder("thullen", log)
    if alpha <= 2.0:
        raise ParameterError("the slice zero needs alpha > 2")
    worst = 0.0
    for t in np.linspace(0.05, 0.85, 20):
        for x in (t, t * np.exp(0.7j)):
            a = closed_forms.thullen_k2_slice(alpha, x)
            b = closed_forms.thullen_k2_series(alpha, x)
            worst = max(worst, abs(a - b) / abs(b))
    rec.add(f"slice matches series at alpha={alpha}", worst <= 1e-8, 1e-8 - worst)

    want = closed_forms.thullen_zero(alpha)
    target = float(np.imag(want))

    def slice_on_axis(y):
        return float(np.real(closed_forms.thullen_k2_slice(alpha, 1j * y)))

    lo, hi = 0.5 * target, min(1.5 * target, 0.999)
    root = brentq(slice_on_axis, lo, hi)
    rec.add(
        f"slice zero located for alpha={alpha}", abs(root - target) <= 1e-3,
        1e-3 - abs(root - target), note=f"root {root:.6f}i vs tan {target:.6f}i",
    )
    residual = abs(closed_forms.thullen_k2_slice(alpha, 1j * root))
    rec.add("slice vanishes at the located zero", residual <= 1e-10, 1e-10 - residual)
    return rec.records


SUITE_NAMES = (
    "inequalities", "kernels", "metric", "levi", "stability", "projection", "thullen",
)


def run_suite(name: str, samples: int = 100_000, seed: int = lab.DEFAULT_SEED,
              alpha: float = 3.0, log=None):
    """Run one named suite (or all of them); returns (records, all_passed)."""
    dispatch = {
        "inequalities": lambda: suite_inequalities(samples=samples, seed=seed, log=log),
        "kernels": lambda: suite_kernels(seed=seed, log=log),
        "metric": lambda: suite_metric(log=log),
        "levi": lambda: suite_levi(log=log),
        "stability": lambda: suite_stability(log=log),
        "projection": lambda: suite_projection(log=log),
        "thullen": lambda: suite_thullen(alpha=alpha, log=log),
    }
    if name == "all":
        records = []
        for key in SUITE_NAMES:
            records.extend(dispatch[key]())
    elif name in dispatch:
        records = dispatch[name]()
    else:
        raise ParameterError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
    return records, all(r.passed for r in records)
