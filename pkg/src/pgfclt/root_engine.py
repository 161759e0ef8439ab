"""Root location for PGFs and the power-sum profile (T_k, S_k, R, T*_l)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln, lambertw
from scipy.spatial import cKDTree

from . import _aberth
from .errors import DegreeZero, NoConvergence, RootOnUnitCircle
from .poly_core import PgfFactor, Pmf, Polynomial

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 500
PAIR_TOL = 1e-8
GUARD_BAND = 1e-9
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True, eq=False)
class RootSet:
    """Roots with multiplicity; roots at exactly zero are only counted."""

    roots: np.ndarray
    residuals: np.ndarray
    zero_root_count: int = 0
    sweeps: int = 0

    def __post_init__(self):
        r = np.asarray(self.roots, dtype=np.complex128).ravel()
        res = np.asarray(self.residuals, dtype=np.float64).ravel()
        if res.shape != r.shape:
            raise ValueError("one residual per root required")
        r.setflags(write=False)
        res.setflags(write=False)
        object.__setattr__(self, "roots", r)
        object.__setattr__(self, "residuals", res)

    @property
    def degree(self) -> int:
        return self.roots.size + self.zero_root_count

    def __len__(self):
        return self.degree

    def all_roots(self) -> np.ndarray:
        """Roots including the explicit zeros."""
        return np.concatenate([self.roots, np.zeros(self.zero_root_count, np.complex128)])

    def scaled(self, factor: float) -> "RootSet":
        return RootSet(self.roots * factor, self.residuals, self.zero_root_count, self.sweeps)

    @staticmethod
    def union(parts: list["RootSet"]) -> "RootSet":
        if not parts:
            return RootSet(np.zeros(0, np.complex128), np.zeros(0))
        return RootSet(
            np.concatenate([p.roots for p in parts]),
            np.concatenate([p.residuals for p in parts]),
            sum(p.zero_root_count for p in parts),
            max(p.sweeps for p in parts),
        )


@dataclass(frozen=True, eq=False)
class RootProfile:
    """Truncated power sums of the roots split by the unit circle.

    ``T[k-1] = sum_{|z|>1} z^-k``, ``S[k-1] = sum_{0<|z|<1} z^k``, ``R`` counts
    roots inside the disk (zeros included) and ``Tstar[l-1] = sum |z|^-l``
    over all roots (infinite when a root sits at 0).
    """

    T: np.ndarray
    S: np.ndarray
    R: int
    Tstar: np.ndarray
    K: int
    outside: np.ndarray
    inside: np.ndarray
    zero_root_count: int

    @property
    def alpha(self) -> float:
        """Smallest modulus among roots outside the unit disk (inf if none)."""
        return float(np.abs(self.outside).min()) if self.outside.size else math.inf

    @property
    def beta(self) -> float:
        """Reciprocal of the largest nonzero modulus inside the disk (inf if none)."""
        return float(1.0 / np.abs(self.inside).max()) if self.inside.size else math.inf


def _initial_guesses(la: np.ndarray) -> np.ndarray:
    d = la.size - 1
    radius = math.exp((la[0] - la[d]) / d)
    ang = GOLDEN_ANGLE * np.arange(d) + 0.5
    return radius * np.exp(1j * ang)


def _polish_linear(la, ph):
    return np.array([-(ph[0] / ph[1]) * math.exp(la[0] - la[1])], dtype=np.complex128)


def _companion(la: np.ndarray, ph: np.ndarray) -> np.ndarray | None:
    finite = la[la > -np.inf]
    if finite.max() - finite.min() > 1200:
        return None
    c = ph * np.exp(la - finite.max())
    return np.polynomial.polynomial.polyroots(c).astype(np.complex128)


def _worst_log_residual(la, ph, mode, m, roots) -> float:
    r = _aberth.log_residuals(la, ph, mode, m, roots) - np.maximum(0.0, (la.size - 1) * np.log(np.abs(roots)))
    return float(np.nanmax(r)) if np.all(np.isfinite(r) | (r < 0)) else math.inf


def _exp_section_guesses(m: int) -> np.ndarray:
    """Asymptotic zeros of the degree-m section of e^z.

    Scaled by 1/m they approach the curve |w e^(1-w)| = 1, |w| <= 1; the
    j-th zero solves m(log w + 1 - w) = log(sqrt(2 pi m)(1 - w) / w) + 2 pi i j.
    """
    psi = np.linspace(1e-6, math.pi, 4001)
    c = np.cos(psi)
    rho = np.where(np.abs(c) > 1e-12, -lambertw(-c / math.e).real / np.where(c == 0, 1.0, c), 1.0 / math.e)
    phase = psi - rho * np.sin(psi)
    j = np.arange(1, m // 2 + 1)
    target = 2.0 * math.pi * j / m
    w = np.interp(target, phase, rho) * np.exp(1j * np.interp(target, phase, psi))
    shift = 0.5 * math.log(2.0 * math.pi * m)
    for _ in range(30):
        f = np.log(w) + 1.0 - w - (shift + np.log(1.0 - w) - np.log(w) + 2j * math.pi * j) / m
        w = w - f / (1.0 / w - 1.0 + 1.0 / (m * (1.0 - w)) + 1.0 / (m * w))
    parts = [m * w, np.conj(m * w)]
    if m % 2:
        x = -0.2785
        for _ in range(50):
            f = m * (math.log(-x) + 1.0 - x) - shift - math.log(1.0 - x) + math.log(-x)
            x -= f / (m * (1.0 / x - 1.0) + 1.0 / (1.0 - x) + 1.0 / x)
        parts.append(np.array([m * x + 0j]))
    return np.concatenate(parts)


def _solve_reduced(la, ph, mode=0, m=0, max_sweeps=MAX_SWEEPS):
    """Roots of a polynomial with nonzero constant term; returns (roots, sweeps)."""
    d = la.size - 1
    if d == 1:
        return _polish_linear(la, ph), 0
    x0 = _exp_section_guesses(m) if mode == 1 else _initial_guesses(la)
    roots, done, sweeps = _aberth.aberth(la, ph, mode, m, x0, max_sweeps)
    if not done.all():
        # Stalled roots usually sit at the rounding floor already; a polished
        # companion solution replaces them only if it has smaller residuals.
        comp = _companion(la, ph)
        if comp is not None:
            comp, _, more = _aberth.aberth(la, ph, mode, m, comp, 5)
            sweeps += more
            if _worst_log_residual(la, ph, mode, m, comp) < _worst_log_residual(la, ph, mode, m, roots):
                roots = comp
    return roots, sweeps


def _pair_conjugates(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split into exactly-real roots and upper-half-plane representatives."""
    scale = np.maximum(1.0, np.abs(w))
    real_mask = np.abs(w.imag) <= PAIR_TOL * scale
    upper = w[(~real_mask) & (w.imag > 0)]
    lower = w[(~real_mask) & (w.imag < 0)]
    reals = list(w[real_mask].real)
    if upper.size != lower.size:
        big, small = (upper, lower) if upper.size > lower.size else (lower, upper)
        order = np.argsort(np.abs(big.imag) / np.maximum(1.0, np.abs(big)))
        extra = big.size - small.size
        cand = big[order[:extra]]
        if np.any(np.abs(cand.imag) > 1e-6 * np.maximum(1.0, np.abs(cand))):
            raise NoConvergence("non-real roots do not close under conjugation")
        reals.extend(cand.real)
        big = big[order[extra:]]
        upper, lower = (big, small) if upper.size > lower.size else (small, big)
    if upper.size:
        target = np.conj(lower)
        tree = cKDTree(np.column_stack([target.real, target.imag]))
        _, idx = tree.query(np.column_stack([upper.real, upper.imag]))
        if np.unique(idx).size != idx.size:
            cost = np.abs(upper[:, None] - target[None, :])
            _, idx = linear_sum_assignment(cost)
        # Ill-conditioned inputs leave pairs apart by the conditioning error;
        # averaging is backward stable and the residual check below decides.
        upper = 0.5 * (upper + target[idx])
    return np.asarray(reals, dtype=np.float64), upper


def _expand_lattice(reals: np.ndarray, upper: np.ndarray, g: int) -> np.ndarray:
    """All g-th roots of a conjugate-closed set, preserving exact closure."""
    if g == 1:
        return np.concatenate([reals.astype(np.complex128), upper, np.conj(upper)])
    out = []
    q = np.arange(2 * g)
    for w in reals:
        a = abs(w) ** (1.0 / g)
        s = 0 if w > 0 else 1
        nums = q[(q % 2) == s]  # angle = nums * pi / g
        real_nums = nums[(nums == 0) | (nums == g)]
        up_nums = nums[(nums > 0) & (nums < g)]
        out.extend(a * np.cos(real_nums * math.pi / g) + 0j)
        z = a * np.exp(1j * math.pi * up_nums / g)
        out.extend(z)
        out.extend(np.conj(z))
    if upper.size:
        base = upper ** (1.0 / g)
        rot = np.exp(2j * math.pi * np.arange(g) / g)
        z = (base[:, None] * rot[None, :]).ravel()
        out.extend(z)
        out.extend(np.conj(z))
    return np.asarray(out, dtype=np.complex128)


def _lattice_stride(idx: np.ndarray) -> int:
    return int(reduce(math.gcd, (int(i) for i in idx), 0)) or 1


def _solve(la, ph, is_real, tol, mode=0, m=0, max_sweeps=MAX_SWEEPS) -> RootSet:
    deg = la.size - 1
    if deg < 1:
        raise DegreeZero("polynomial has degree 0")
    nz = np.flatnonzero(la > -np.inf)
    z0 = int(nz[0])
    la_r, ph_r = la[z0:], ph[z0:]
    g = _lattice_stride(nz - z0)
    la_q, ph_q = la_r[::g], ph_r[::g]
    if la_q.size == 1:
        return RootSet(np.zeros(0, np.complex128), np.zeros(0), z0)
    w, sweeps = _solve_reduced(la_q, ph_q, mode, m, max_sweeps)
    if is_real:
        reals, upper = _pair_conjugates(w)
        w = np.concatenate([reals.astype(np.complex128), upper, np.conj(upper)])
    else:
        reals, upper = np.zeros(0), np.zeros(0, np.complex128)
    # Residual |P(z)| / (height * max(1,|z|)^deg), evaluated on the reduced roots.
    log_p = _aberth.log_residuals(la_q, ph_q, mode, m, w)
    log_mod = np.log(np.abs(w)) / g
    log_res = log_p + z0 * log_mod - la.max() - deg * np.maximum(0.0, log_mod)
    res_w = np.exp(log_res)
    if np.any(~(res_w <= tol)):
        raise NoConvergence(f"root residual {np.nanmax(res_w):.3g} exceeds tolerance {tol:g}")
    if is_real:
        roots = _expand_lattice(reals, upper, g)
        res = np.concatenate(
            [
                np.repeat(res_w[: reals.size], g),
                np.repeat(res_w[reals.size : reals.size + upper.size], g),
                np.repeat(res_w[reals.size + upper.size :], g),
            ]
        )
    else:
        rot = np.exp(2j * math.pi * np.arange(g) / g)
        roots = ((w ** (1.0 / g))[:, None] * rot[None, :]).ravel()
        res = np.repeat(res_w, g)
    return RootSet(roots, res, z0, sweeps)


def find_roots(poly: Polynomial, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS) -> RootSet:
    """All roots of ``poly`` with multiplicity.

    Zero coefficients at the low end become ``zero_root_count``; a common
    stride among the remaining exponents is factored out first, so
    ``Q(z**g)`` costs a degree-``deg/g`` solve.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _solve(poly.log_abs, poly.phases, poly.is_real, tol, max_sweeps=max_sweeps)


def exp_section_roots(m: int, tol: float = DEFAULT_TOL) -> RootSet:
    """Roots of the degree-m Taylor section of e^z (any normalization)."""
    if m < 1:
        raise DegreeZero("section order must be at least 1")
    j = np.arange(m + 1, dtype=np.float64)
    la = -gammaln(j + 1.0)
    ph = np.ones(m + 1, dtype=np.complex128)
    return _solve(la, ph, True, tol, mode=1 if m >= 8 else 0, m=m)


def factor_roots(f: PgfFactor, tol: float = DEFAULT_TOL) -> RootSet:
    if f.exp_section:
        base = exp_section_roots(f.base.n, tol)
    else:
        base = find_roots(f.base.polynomial(), tol)
    if f.lattice > 1:
        reals = base.roots[base.roots.imag == 0].real
        upper = base.roots[base.roots.imag > 0]
        roots = _expand_lattice(reals, upper, f.lattice)
        res = np.full(roots.size, base.residuals.max() if base.residuals.size else 0.0)
        base = RootSet(roots, res, base.zero_root_count * f.lattice, base.sweeps)
    if f.scale != 1.0:
        base = base.scaled(1.0 / f.scale)
    if f.power > 1:
        base = RootSet.union([base] * f.power)
    return base


def pmf_roots(pmf: Pmf, tol: float = DEFAULT_TOL) -> RootSet:
    """Roots of the PGF of ``pmf``, solved factor by factor when the
    product structure is known."""
    return RootSet.union([factor_roots(f, tol) for f in pmf.leaf_factors()])


def newton_power_sums(poly: Polynomial, K: int) -> np.ndarray:
    """sum over roots of z^k, k = 1..K, from coefficients via Newton's identities."""
    d = poly.degree
    if d < 1:
        raise DegreeZero("polynomial has degree 0")
    if K < 1:
        raise ValueError("K must be at least 1")
    a = poly.phases * np.exp(poly.log_abs - poly.log_abs[d])
    c = np.zeros(K + 1, dtype=np.complex128)
    top = min(K, d)
    c[1 : top + 1] = a[d - 1 :: -1][:top]
    p = np.zeros(K + 1, dtype=np.complex128)
    for k in range(1, K + 1):
        acc = k * c[k]
        for i in range(1, k):
            acc += c[i] * p[k - i]
        p[k] = -acc
    return p[1:]


def default_truncation(alpha: float, beta: float = math.inf, target: float = 1e-15) -> int:
    """K = max(64, 8 * ceil(log(1/target) / log(min(alpha, beta))))."""
    rate = min(alpha, beta)
    if not math.isfinite(rate):
        return 64
    return max(64, 8 * math.ceil(math.log(1.0 / target) / math.log(rate)))


def _power_sums(log_x: np.ndarray, ks: np.ndarray, block: int = 1 << 22) -> np.ndarray:
    """sum_i exp(k * log_x[i]) for every k, in row blocks of bounded size."""
    out = np.zeros(ks.size, dtype=np.result_type(log_x, np.float64))
    rows = max(1, block // ks.size)
    with np.errstate(over="ignore"):
        for start in range(0, log_x.size, rows):
            out += np.exp(np.multiply.outer(log_x[start : start + rows], ks)).sum(axis=0)
    return out


def root_profile(rs: RootSet, K: int | None = None, max_K: int = 2_000_000) -> RootProfile:
    z = rs.roots
    mod = np.abs(z)
    if np.any(np.abs(mod - 1.0) <= GUARD_BAND):
        raise RootOnUnitCircle(
            "a root lies within 1e-9 of the unit circle; tilt the PMF first",
            suggested_r=suggest_tilt(rs),
        )
    outside = z[mod > 1.0]
    inside = z[mod < 1.0]
    if K is None:
        a = float(np.abs(outside).min()) if outside.size else math.inf
        b = float(1.0 / np.abs(inside).max()) if inside.size else math.inf
        K = min(default_truncation(a, b), max_K)
    if K < 2:
        raise ValueError("K must be at least 2")
    ks = np.arange(1, K + 1, dtype=np.float64)
    T = _power_sums(-np.log(outside), ks)
    S = _power_sums(np.log(inside), ks)
    if rs.zero_root_count:
        Tstar = np.full(K, math.inf)
    else:
        Tstar = _power_sums(-np.log(mod), ks).real
    R = int(inside.size) + rs.zero_root_count
    return RootProfile(T, S, R, Tstar, K, outside, inside, rs.zero_root_count)


def min_dist_to_one(rs: RootSet) -> float:
    if rs.degree == 0:
        raise ValueError("empty root set")
    d = float(np.abs(1.0 - rs.roots).min()) if rs.roots.size else math.inf
    return min(d, 1.0) if rs.zero_root_count else d


def unit_circle_clearance(moduli: np.ndarray, r: float) -> float:
    return float(np.abs(moduli / r - 1.0).min()) if moduli.size else math.inf


def suggest_tilt(rs: RootSet, lo: float = 0.9, hi: float = 1.0, grid: int = 2001) -> float:
    """r in (lo, hi) maximizing min_z | |z|/r - 1 | (tilting divides roots by r)."""
    mod = np.abs(rs.roots)
    if mod.size == 0:
        return 1.0
    rs_grid = np.linspace(lo, hi, grid + 2)[1:-1]
    clear = np.abs(mod[None, :] / rs_grid[:, None] - 1.0).min(axis=1)
    best = int(np.argmax(clear))
    a = rs_grid[max(best - 1, 0)]
    b = rs_grid[min(best + 1, rs_grid.size - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(60):
        c = b - g * (b - a)
        d = a + g * (b - a)
        if unit_circle_clearance(mod, c) >= unit_circle_clearance(mod, d):
            b = d
        else:
            a = c
    r = 0.5 * (a + b)
    if unit_circle_clearance(mod, r) < clear[best]:
        r = float(rs_grid[best])
    return float(r)
