"""The region S = {x + iy : x(1 + x^2 + y^2) >= 2(x^2 + y^2)} and the
moments of the two-point factors attached to each PGF root."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormsDisagree, OutOfRange, PositiveRealRoot
from .root_engine import RootSet

FORM_TOL = 1e-9
SCAN_POINTS = 600
LOG_R_RANGE = (-6.0 * math.log(10.0), 6.0 * math.log(10.0))  # natural log of r
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def in_region_s(z: complex) -> bool:
    """Exact rational test, no trigonometry."""
    x, y = float(np.real(z)), float(np.imag(z))
    return x * (1.0 + x * x + y * y) >= 2.0 * (x * x + y * y)


def in_region_s_many(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    x, y = z.real, z.imag
    return x * (1.0 + x * x + y * y) >= 2.0 * (x * x + y * y)


def boundary_point(r):
    """Upper branch of the boundary: r e^{i theta}, cos theta = 2r / (1 + r^2)."""
    r = np.asarray(r, dtype=np.float64)
    c = 2.0 * r / (1.0 + r * r)
    s = np.abs(1.0 - r * r) / (1.0 + r * r)  # sin theta >= 0, exact form of sqrt(1 - c^2)
    return r * c + 1j * r * s


def dist_to_boundary_many(z, tol: float = 1e-12) -> np.ndarray:
    """Vectorized distance from each point to the boundary curve of S.

    Points are reflected into the upper half plane, where the nearest
    boundary point always lies on the upper branch. A log-spaced scan in r
    brackets the minimum, golden-section search refines it, and the origin
    (the limit of both ends of the branch) is a candidate too.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    w = np.asarray(z, dtype=np.complex128).ravel()
    if w.size == 0:
        return np.zeros(0)
    w = w.real + 1j * np.abs(w.imag)
    grid = np.linspace(*LOG_R_RANGE, SCAN_POINTS)
    best = np.empty(w.size)
    lo = np.empty(w.size)
    hi = np.empty(w.size)
    step = grid[1] - grid[0]
    for start in range(0, w.size, 2048):
        chunk = w[start : start + 2048]
        d = np.abs(chunk[:, None] - boundary_point(np.exp(grid))[None, :])
        i = np.argmin(d, axis=1)
        best[start : start + chunk.size] = d[np.arange(chunk.size), i]
        lo[start : start + chunk.size] = grid[i] - step
        hi[start : start + chunk.size] = grid[i] + step
    # Golden-section in log r; the bracket width shrinks by 0.618 per step.
    iters = max(1, math.ceil(math.log(tol / (2.0 * step * (1.0 + np.abs(w).max()))) / math.log(_GOLD)))
    a, b = lo, hi
    c = b - _GOLD * (b - a)
    e = a + _GOLD * (b - a)
    fc = np.abs(w - boundary_point(np.exp(c)))
    fe = np.abs(w - boundary_point(np.exp(e)))
    for _ in range(min(iters, 200)):
        left = fc <= fe
        a, b = np.where(left, a, c), np.where(left, e, b)
        c_new = np.where(left, b - _GOLD * (b - a), e)
        e_new = np.where(left, c, a + _GOLD * (b - a))
        fc_new = np.where(left, np.abs(w - boundary_point(np.exp(c_new))), fe)
        fe = np.where(left, fc, np.abs(w - boundary_point(np.exp(e_new))))
        c, e, fc = c_new, e_new, fc_new
    refined = np.minimum(fc, fe)
    return np.minimum(np.minimum(best, refined), np.abs(w))


def dist_to_region_s_many(z, tol: float = 1e-12) -> np.ndarray:
    """Vectorized distance to S (0 for points of S)."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    out = np.zeros(z.size)
    outside = ~in_region_s_many(z)
    if outside.any():
        out[outside] = dist_to_boundary_many(z[outside], tol)
    return out


def dist_to_region_s(z: complex, tol: float = 1e-12) -> float:
    """Euclidean distance from z to S (0 inside S)."""
    return float(dist_to_region_s_many([z], tol)[0])


@dataclass(frozen=True)
class QuadFactor:
    """Coefficients of the factor of P attached to one root (or conjugate
    pair), normalized to value 1 at z = 1."""

    p0: float
    p1: float
    p2: float
    mu: float

    def pform_moment(self, k: int) -> float:
        mu = self.mu
        return self.p2 * (2.0 - mu) ** k + self.p1 * (1.0 - mu) ** k + self.p0 * (-mu) ** k


def _is_positive_real(zeta: complex) -> bool:
    return zeta.imag == 0.0 and zeta.real > 0.0


def quad_factor(zeta: complex) -> QuadFactor:
    """(z - zeta)(z - conj zeta) / |1 - zeta|^2 for non-real zeta, and the
    linear factor (z + r) / (1 + r) for zeta = -r <= 0."""
    zeta = complex(zeta)
    if _is_positive_real(zeta):
        raise PositiveRealRoot(f"{zeta.real} is a positive real root")
    if zeta.imag == 0.0:
        r = -zeta.real
        p1 = 1.0 / (1.0 + r)
        p0 = r / (1.0 + r)
        return QuadFactor(p0, p1, 0.0, p1)
    a, b = zeta.real, zeta.imag
    q = (1.0 - a) ** 2 + b * b
    p2 = 1.0 / q
    p1 = -2.0 * a / q
    p0 = (a * a + b * b) / q
    return QuadFactor(p0, p1, p2, 2.0 * p2 + p1)


def _closed_moment(zeta: complex, k: int) -> tuple[float, float]:
    """Closed-form m_k and the magnitude of its terms (for the comparison scale)."""
    if zeta.imag == 0.0:
        p = 1.0 / (1.0 - zeta.real)
        t = (p * (1.0 - p) ** k, (1.0 - p) * (-p) ** k)
        return t[0] + t[1], abs(t[0]) + abs(t[1])
    a, b = zeta.real, zeta.imag
    s = a * a + b * b
    q = (1.0 - a) ** 2 + b * b
    t = ((2.0 * s - 2.0 * a) ** k, -2.0 * a * (s - 1.0) ** k, s * (2.0 * a - 2.0) ** k)
    den = q ** (k + 1)
    return sum(t) / den, sum(abs(x) for x in t) / den


def central_moment_mk(zeta: complex, k: int) -> float:
    """k-th central moment of the factor attached to zeta, checked against its closed form."""
    if k < 0:
        raise OutOfRange("k must be nonnegative")
    zeta = complex(zeta)
    f = quad_factor(zeta)
    mu = f.mu
    terms = (f.p2 * (2.0 - mu) ** k, f.p1 * (1.0 - mu) ** k, f.p0 * (-mu) ** k)
    val = sum(terms)
    closed, closed_scale = _closed_moment(zeta, k)
    scale = max(sum(abs(t) for t in terms), closed_scale)
    if abs(val - closed) > FORM_TOL * scale:
        raise FormsDisagree(f"m_{k}({zeta}) p-form {val!r} vs closed form {closed!r}")
    return float(val)


def m2_value(zeta: complex) -> float:
    """m_2 from the factored numerator -2(a(r^2+1) - 2r^2) for the quadratic case."""
    zeta = complex(zeta)
    if _is_positive_real(zeta):
        raise PositiveRealRoot(f"{zeta.real} is a positive real root")
    if zeta.imag == 0.0:
        r = -zeta.real
        return r / (1.0 + r) ** 2
    a, b = zeta.real, zeta.imag
    r2 = a * a + b * b
    q = (1.0 - a) ** 2 + b * b
    return -2.0 * (a * (r2 + 1.0) - 2.0 * r2) / (q * q)


def m2_sign(zeta: complex) -> int:
    """Sign of m_2; nonpositive exactly when zeta lies in S."""
    zeta = complex(zeta)
    if _is_positive_real(zeta):
        raise PositiveRealRoot(f"{zeta.real} is a positive real root")
    if zeta.imag == 0.0:
        return 0 if zeta.real == 0.0 else 1
    a, b = zeta.real, zeta.imag
    r2 = a * a + b * b
    num = -2.0 * (a * (r2 + 1.0) - 2.0 * r2)
    return (num > 0) - (num < 0)


@dataclass(frozen=True)
class RootDiagnostic:
    root: complex
    in_S: bool
    dist_to_S: float
    m2: float


@dataclass(frozen=True)
class RegionReport:
    N_delta: int
    delta: float
    per_root: list[RootDiagnostic] = field(default_factory=list)


def _m2_many(z: np.ndarray) -> np.ndarray:
    a, b = z.real, z.imag
    r2 = a * a + b * b
    q = (1.0 - a) ** 2 + b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = -2.0 * (a * (r2 + 1.0) - 2.0 * r2) / (q * q)
        lin = -a / (1.0 - a) ** 2
    out = np.where(b == 0.0, lin, quad)
    return np.where((b == 0.0) & (a > 0.0), np.nan, out)


def count_near_s(rs: RootSet, delta: float, tol: float = 1e-12) -> RegionReport:
    """Count roots (with multiplicity) within delta of S; zero roots count as in S."""
    if not delta > 0:
        raise OutOfRange("delta must be positive")
    z = rs.roots
    inside = in_region_s_many(z)
    dist = dist_to_region_s_many(z, tol)
    m2 = _m2_many(z)
    per_root = [RootDiagnostic(complex(w), bool(i), float(d), float(m)) for w, i, d, m in zip(z, inside, dist, m2)]
    per_root += [RootDiagnostic(0j, True, 0.0, 0.0)] * rs.zero_root_count
    n = int(np.count_nonzero(dist <= delta)) + rs.zero_root_count
    return RegionReport(n, float(delta), per_root)


def moment_bound_probe(zeta: complex, delta: float, k: int) -> tuple[float, bool]:
    """|m_k| / m_2 when zeta is farther than delta from S."""
    if k < 2:
        raise OutOfRange("k must be at least 2")
    if not dist_to_region_s(zeta) > delta:
        return math.nan, False
    return abs(central_moment_mk(zeta, k)) / m2_value(zeta), True
