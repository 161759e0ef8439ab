"""Seeded property suites comparing root-side quantities with independent
coefficient-side oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy.special import lambertw

from . import diagnostics
from .cumulants import cumulant_tail_bound, cumulants_from_roots, exp_form_eval, exp_form_terms
from .errors import PgfCltError
from .families import (
    bernoulli_product,
    scaled_truncated_poisson,
    truncated_poisson,
    variance_boost,
    lattice_parameters,
)
from .poly_core import Pmf, cumulants_from_pmf, pmf_from_weights, tilt
from .region import (
    central_moment_mk,
    dist_to_boundary_many,
    in_region_s_many,
    m2_sign,
    m2_value,
)
from .root_engine import (
    RootSet,
    exp_section_roots,
    min_dist_to_one,
    newton_power_sums,
    pmf_roots,
    root_profile,
)

DEFAULT_SEED = 20240611
MIN_DIST_TO_ONE = 0.05
CIRCLE_CLEARANCE = 1e-3
# Scaled roots of e^z sections accumulate on |z e^(1-z)| = 1, whose closest
# point to 0 is W(1/e).
SZEGO_INNER = float(lambertw(1.0 / math.e).real)


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def check(self, cond: bool, label: str) -> bool:
        self.total += 1
        if cond:
            self.passed += 1
        elif len(self.failures) < 20:
            self.failures.append(label)
        return cond

    def line(self) -> str:
        return f"{self.name}: {self.passed}/{self.total} {'PASS' if self.ok else 'FAIL'}"


@dataclass(frozen=True)
class CorpusItem:
    """A random PMF tilted off the unit circle, with its roots."""

    pmf: Pmf
    roots: RootSet
    r: float


def random_pmf_corpus(rng: np.random.Generator, count: int, max_degree: int = 40) -> list[CorpusItem]:
    """Uniform random weights of random degree, tilted so that every root has
    | |zeta| - 1 | > 1e-3; draws with a root within 0.05 of 1 are redrawn."""
    out = []
    while len(out) < count:
        d = int(rng.integers(1, max_degree + 1))
        pmf = pmf_from_weights(rng.uniform(size=d + 1))
        rs = pmf_roots(pmf)
        pmf_t, r, rs_t = diagnostics.auto_tilt(pmf, rs, CIRCLE_CLEARANCE)
        if min_dist_to_one(rs_t) <= MIN_DIST_TO_ONE:
            continue
        if np.abs(np.abs(rs_t.roots) - 1.0).min() <= CIRCLE_CLEARANCE:
            continue
        out.append(CorpusItem(pmf_t, rs_t, r))
    return out


def cumulant_agreement(item: CorpusItem, M: int = 6) -> tuple[bool, float]:
    """Root-based vs coefficient cumulants; returns (agree, worst error in tolerance units)."""
    kr = cumulants_from_roots(root_profile(item.roots), M).values
    ko = cumulants_from_pmf(item.pmf, M).values
    err = np.abs(kr - ko)
    small = np.abs(ko) < 1e-3
    units = np.where(small, err / 1e-9, err / (1e-6 * np.abs(np.where(small, 1.0, ko))))
    return bool(np.all(units <= 1.0)), float(units.max())


def exp_form_agreement(item: CorpusItem, rng: np.random.Generator, points: int = 20) -> tuple[bool, float]:
    """exp_form_eval vs Horner at random points of |z - 1| <= delta/2."""
    terms = exp_form_terms(root_profile(item.roots))
    radius = 0.5 * min(terms.delta, 1e6)
    rad = radius * np.sqrt(rng.uniform(size=points))
    z = 1.0 + rad * np.exp(1j * rng.uniform(-math.pi, math.pi, size=points))
    direct = np.polynomial.polynomial.polyval(z, item.pmf.probs)
    got = np.array([exp_form_eval(terms, w) for w in z])
    err = np.abs(got - direct) / np.maximum(1.0, np.abs(direct))
    return bool(np.all(err <= 1e-9)), float(err.max())


def tail_bound_lhs(x: complex, theta: float, M: int) -> float:
    """|sum_{m>=M} (i theta)^m / m! sum_{k>=1} k^(m-1) x^k| for |x| < 1, at 40 digits.

    The full sum over m >= 1 is log(1 - x) - log(1 - x e^{i theta}); the
    terms m < M are subtracted using polylog(1 - m, x) = sum_k k^(m-1) x^k.
    """
    with mpmath.workdps(40):
        x = mpmath.mpc(x)
        th = mpmath.mpf(theta)
        acc = mpmath.log(1 - x) - mpmath.log(1 - x * mpmath.expj(th))
        for m in range(1, M):
            acc -= (1j * th) ** m / mpmath.factorial(m) * mpmath.polylog(1 - m, x)
        return float(abs(acc))


def sample_tail_case(rng: np.random.Generator) -> tuple[complex, float, float, int, bool]:
    """(zeta, delta, theta, M, inside) with delta below the admissible distance
    and |theta e / delta| < 0.9."""
    inside = bool(rng.integers(0, 2))
    zeta = complex(np.exp(rng.uniform(0.0, math.log(4.0))) * np.exp(1j * rng.uniform(-math.pi, math.pi)))
    if inside:
        zeta = 1.0 / zeta
        reach = abs(1.0 - zeta)
    else:
        reach = abs(1.0 - 1.0 / zeta)
    delta = float(rng.uniform(0.0, 1.0) * reach)
    theta = float(rng.uniform(-1.0, 1.0) * 0.9 * delta / math.e)
    M = int(rng.integers(1, 11))
    return zeta, delta, theta, M, inside


def tail_case_holds(zeta: complex, delta: float, theta: float, M: int, inside: bool) -> tuple[bool, float, float]:
    x, th = (zeta, -theta) if inside else (1.0 / zeta, theta)
    lhs = tail_bound_lhs(x, th, M)
    rhs = cumulant_tail_bound(delta, theta, M)
    return lhs <= rhs * (1.0 + 1e-9), lhs, rhs


def region_grid(size: int = 200, band: float = 1e-6) -> np.ndarray:
    """Grid over [-4, 4]^2 minus the positive real axis and a band around the boundary of S."""
    ax = np.linspace(-4.0, 4.0, size)
    z = (ax[None, :] + 1j * ax[:, None]).ravel()
    z = z[~((z.imag == 0.0) & (z.real > 0.0))]
    return z[dist_to_boundary_many(z) > band]


def factor_variance(rs: RootSet) -> float:
    """Sum of m_2 over real roots and upper-half-plane representatives."""
    z = rs.roots
    reps = z[(z.imag > 0) | (z.imag == 0)]
    return float(sum(m2_value(w) for w in reps))


def _suite_cumulants(rng, res: SuiteResult, scale: float) -> None:
    corpus = random_pmf_corpus(rng, max(1, int(200 * scale)))
    for i, item in enumerate(corpus):
        ok, worst = cumulant_agreement(item)
        res.check(ok, f"pmf {i}: cumulant error {worst:.3g} tolerance units")
        ok, worst = exp_form_agreement(item, rng)
        res.check(ok, f"pmf {i}: exp-form error {worst:.3g}")


def _suite_tail(rng, res: SuiteResult, scale: float) -> None:
    for _ in range(max(1, int(1000 * scale))):
        case = sample_tail_case(rng)
        ok, lhs, rhs = tail_case_holds(*case)
        res.check(ok, f"zeta={case[0]:.6g} delta={case[1]:.6g} theta={case[2]:.6g} M={case[3]}: {lhs:.6g} > {rhs:.6g}")


def _suite_region(rng, res: SuiteResult, scale: float) -> None:
    size = max(10, int(200 * math.sqrt(scale)))
    z = region_grid(size)
    signs = np.array([m2_sign(w) for w in z])
    inside = in_region_s_many(z)
    res.check(bool(np.all((signs <= 0) == inside)), f"sign/region mismatch at {int(np.sum((signs <= 0) != inside))} points")
    bad = 0
    for w in z:
        try:
            for k in range(9):
                central_moment_mk(w, k)
        except PgfCltError:
            bad += 1
    res.check(bad == 0, f"moment forms disagree at {bad} points")


def _suite_variance(rng, res: SuiteResult, scale: float) -> None:
    for i in range(max(1, int(100 * scale))):
        d = int(rng.integers(1, 41))
        pmf = pmf_from_weights(rng.uniform(size=d + 1))
        total = factor_variance(pmf_roots(pmf))
        res.check(abs(total - pmf.variance) <= 1e-6 * pmf.variance, f"pmf {i}: sum m2 {total!r} vs {pmf.variance!r}")


def _suite_roots(rng, res: SuiteResult, scale: float) -> None:
    ks = np.arange(1, 11)
    for i in range(max(1, int(100 * scale))):
        d = int(rng.integers(1, 51))
        pmf = pmf_from_weights(rng.uniform(size=d + 1))
        rs = pmf_roots(pmf)
        z = rs.all_roots()
        res.check(z.size == pmf.polynomial().degree, f"pmf {i}: root count")
        nw = newton_power_sums(pmf.polynomial(), 10)
        direct = np.array([np.sum(z**k) for k in ks])
        res.check(bool(np.all(np.abs(direct - nw) <= 1e-8 * np.abs(nw))), f"pmf {i}: power sums")
        res.check(np.array_equal(np.sort_complex(rs.roots), np.sort_complex(np.conj(rs.roots))), f"pmf {i}: conjugate closure")
        r = float(rng.uniform(0.5, 2.0))
        moved = np.sort(np.abs(pmf_roots(tilt(pmf, r)).roots))
        res.check(bool(np.allclose(moved, np.sort(np.abs(rs.roots)) / r, rtol=1e-8, atol=0)), f"pmf {i}: tilt commutation")
    for m in (8, 16, 32, 64):
        lo, hi = diagnostics.szego_annulus_check(exp_section_roots(m), m)
        res.check(hi <= 1.0 + 1e-8, f"m={m}: ratio_high {hi!r}")
        res.check(lo >= SZEGO_INNER, f"m={m}: ratio_low {lo!r} below {SZEGO_INNER!r}")


def _suite_families(rng, res: SuiteResult, scale: float) -> None:
    for n in (100, 1000, 10000):
        pmf = scaled_truncated_poisson(n)
        k, m = lattice_parameters(n)
        ref = truncated_poisson(m).probs
        res.check(bool(np.all(np.abs(pmf.probs[::k] - ref) <= 1e-12)) and not np.any(pmf.probs[np.arange(pmf.n + 1) % k != 0]), f"n={n}: lattice coefficients")
        res.check(min_dist_to_one(pmf_roots(pmf)) > 1.0, f"n={n}: min |1 - zeta| = {min_dist_to_one(pmf_roots(pmf)):.4f} <= 1")
    q = rng.uniform(0.05, 0.95, size=int(rng.integers(5, 30)))
    z = pmf_roots(bernoulli_product(q)).roots
    res.check(bool(np.all(np.abs(z.imag) <= 1e-8) and np.all(z.real <= 0)), "bernoulli product roots not real nonpositive")
    base = scaled_truncated_poisson(200)
    boosted = variance_boost(base, 1.5)
    t = math.ceil(9.0 * base.variance)
    expect = np.sort_complex(np.concatenate([pmf_roots(base).roots, -np.ones(t)]))
    got = np.sort_complex(pmf_roots(boosted).roots)
    res.check(got.size == expect.size and bool(np.allclose(got, expect, atol=1e-8, rtol=0)), "variance boost root union")


def _suite_normality(rng, res: SuiteResult, scale: float) -> None:
    ks = [diagnostics.ks_to_normal(bernoulli_product(np.full(n, 0.5))) for n in (100, 1000, 10000)]
    res.check(ks[0] > ks[1] > ks[2], f"bernoulli KS not decreasing: {ks}")
    for n in (1000, 10000):
        val = diagnostics.ks_to_normal(scaled_truncated_poisson(n))
        res.check(val >= 0.05, f"n={n}: scaled Poisson KS {val:.4f} < 0.05")
    pmf = bernoulli_product(np.full(400, 0.3))
    rs = pmf_roots(pmf)
    held = [diagnostics.check_large_var(pmf, rs, e).holds for e in (0.45, 0.4, 0.3, 0.2, 0.1)]
    res.check(all(b or not a for a, b in zip(held, held[1:])), f"large-var verdict not monotone in eps: {held}")


SUITES: dict[str, Callable[[np.random.Generator, SuiteResult, float], None]] = {
    "cumulants": _suite_cumulants,
    "tail": _suite_tail,
    "region": _suite_region,
    "variance": _suite_variance,
    "roots": _suite_roots,
    "families": _suite_families,
    "normality": _suite_normality,
}


def run_suites(seed: int = DEFAULT_SEED, suites=None, scale: float = 1.0) -> list[SuiteResult]:
    """Run the named suites (all by default); each gets its own seeded stream."""
    names = list(SUITES) if not suites else list(suites)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    out = []
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        res = SuiteResult(name)
        try:
            SUITES[name](rng, res, scale)
        except PgfCltError as exc:
            res.check(False, f"{type(exc).__name__}: {exc}")
        out.append(res)
    return out


def summary_text(results: list[SuiteResult]) -> str:
    lines = [r.line() for r in results]
    for r in results:
        lines.extend(f"  {r.name}: {msg}" for msg in r.failures)
    return "\n".join(lines) + "\n"
