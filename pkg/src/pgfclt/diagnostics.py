"""Normality metrics for standardized PMFs and per-n versions of the root
conditions that imply (or rule out) a central limit theorem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import BadEpsilon, KTooLarge, OutOfRange, ZeroVariance
from .poly_core import Pmf, central_moments, tilt
from .region import count_near_s
from .root_engine import RootSet, min_dist_to_one, pmf_roots, suggest_tilt, unit_circle_clearance

MAX_STANDARDIZED_MOMENT = 12
POISSON_TAIL = 1e-12
TILT_CLEARANCE = 1e-3


@dataclass(frozen=True, eq=False)
class StandardizedDist:
    """Atoms (k - mu) / sigma carrying the original masses (zero masses dropped)."""

    locations: np.ndarray
    masses: np.ndarray
    mu: float
    sigma: float

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.masses.tolist()))

    def cdf_steps(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(locations, F just below, F at) for each atom."""
        upper = np.cumsum(self.masses)
        upper = np.minimum(upper / upper[-1], 1.0)
        lower = np.concatenate([[0.0], upper[:-1]])
        return self.locations, lower, upper


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    inputs: dict[str, float]
    measured: dict[str, float]
    holds: bool
    tilt: float = 1.0
    notes: dict[str, str] = field(default_factory=dict)


def _require_spread(pmf: Pmf) -> None:
    if not pmf.variance > 0:
        raise ZeroVariance("distribution has zero variance")


def standardize(pmf: Pmf) -> StandardizedDist:
    _require_spread(pmf)
    k = np.flatnonzero(pmf.probs)
    mu, sigma = pmf.mean, pmf.sigma
    return StandardizedDist((k - mu) / sigma, pmf.probs[k].copy(), mu, sigma)


def normal_cdf(x):
    return ndtr(x)


def ks_to_normal(pmf: Pmf) -> float:
    """sup_x |F*(x) - Phi(x)|, checking both one-sided limits at every atom."""
    x, lower, upper = standardize(pmf).cdf_steps()
    phi = normal_cdf(x)
    return float(max(np.abs(upper - phi).max(), np.abs(lower - phi).max()))


def standardized_poisson(tail: float = POISSON_TAIL) -> StandardizedDist:
    """Poisson(1) - 1, truncated once the remaining mass is below ``tail``."""
    masses = []
    p = math.exp(-1.0)
    k = 0
    remaining = 1.0
    while remaining > tail:
        masses.append(p)
        remaining -= p
        k += 1
        p /= k
    masses = np.array(masses)
    return StandardizedDist(np.arange(masses.size) - 1.0, masses / masses.sum(), 1.0, 1.0)


def _cdf_at(d: StandardizedDist, x: np.ndarray, left: bool) -> np.ndarray:
    cum = np.concatenate([[0.0], np.cumsum(d.masses) / d.masses.sum()])
    idx = np.searchsorted(d.locations, x, side="left" if left else "right")
    return cum[idx]


def ks_between(a: StandardizedDist | Pmf, b: StandardizedDist | Pmf) -> float:
    """Sup distance between two distribution functions on the union of atoms."""
    a = a if isinstance(a, StandardizedDist) else standardize(a)
    b = b if isinstance(b, StandardizedDist) else standardize(b)
    x = np.union1d(a.locations, b.locations)
    gaps = [np.abs(_cdf_at(a, x, side) - _cdf_at(b, x, side)).max() for side in (True, False)]
    return float(max(gaps))


def cf_distance(pmf: Pmf, theta_max: float = 3.0, grid_points: int = 61) -> float:
    """max over theta in [0, theta_max] of |P(e^{i theta/sigma}) e^{-i theta mu/sigma} - e^{-theta^2/2}|."""
    if not theta_max > 0:
        raise OutOfRange("theta_max must be positive")
    if grid_points < 2:
        raise OutOfRange("grid_points must be at least 2")
    _require_spread(pmf)
    mu, sigma = pmf.mean, pmf.sigma
    theta = np.linspace(0.0, theta_max, grid_points)
    z = np.exp(1j * theta / sigma)
    val = np.zeros_like(z)
    for c in pmf.probs[::-1]:
        val = val * z + c
    val *= np.exp(-1j * theta * mu / sigma)
    return float(np.abs(val - np.exp(-0.5 * theta**2)).max())


def standardized_moment(pmf: Pmf, k: int) -> float:
    """E[((X - mu) / sigma)^k] from extended-precision central moments."""
    if k > MAX_STANDARDIZED_MOMENT:
        raise KTooLarge(f"k = {k} exceeds {MAX_STANDARDIZED_MOMENT}")
    if k < 0:
        raise OutOfRange("k must be nonnegative")
    _require_spread(pmf)
    mom = central_moments(pmf, max(k, 2))
    return mom[k] / mom[2] ** (k / 2.0)


def check_large_var(pmf: Pmf, rs: RootSet, eps: float) -> ConditionReport:
    """sigma > n^eps and every root has |1 - zeta| > sigma^-(1 - eps)."""
    if not (0.0 < eps < 1.0):
        raise BadEpsilon(f"eps must lie in (0, 1), got {eps!r}")
    sigma = pmf.sigma
    n = pmf.n
    sigma_floor = float(n) ** eps
    dist = min_dist_to_one(rs) if rs.degree else math.inf
    dist_floor = sigma ** -(1.0 - eps) if sigma > 0 else math.inf
    holds = bool(sigma > sigma_floor and dist > dist_floor)
    return ConditionReport(
        "large_var",
        {"eps": eps},
        {
            "n": float(n),
            "sigma": sigma,
            "sigma_floor": sigma_floor,
            "min_dist_to_one": dist,
            "dist_floor": dist_floor,
        },
        holds,
    )


def check_power_sum(rs: RootSet, k: int) -> ConditionReport:
    """Raw T*_k = sum |zeta|^-k; infinite (and failing) when a root sits at 0."""
    if k < 1:
        raise OutOfRange("k must be at least 1")
    if rs.zero_root_count:
        t = math.inf
    else:
        t = float(np.sum(np.abs(rs.roots) ** (-float(k))))
    return ConditionReport("power_sum", {"k": float(k)}, {"Tstar_k": t}, math.isfinite(t))


def check_region(rs: RootSet, sigma: float, delta: float) -> ConditionReport:
    """min |1 - zeta| > delta, with N(delta) / sigma^3 recorded for trend checks."""
    if not delta > 0:
        raise OutOfRange("delta must be positive")
    if not sigma > 0:
        raise ZeroVariance("sigma must be positive")
    dist = min_dist_to_one(rs) if rs.degree else math.inf
    n_delta = count_near_s(rs, delta).N_delta
    s3 = sigma**3
    return ConditionReport(
        "region",
        {"delta": delta},
        {
            "min_dist_to_one": dist,
            "N_delta": float(n_delta),
            "sigma_cubed": s3,
            "N_delta_over_sigma3": n_delta / s3,
        },
        bool(dist > delta),
    )


def szego_annulus_check(rs: RootSet, m: int) -> tuple[float, float]:
    """(min |zeta| / m, max |zeta| / m) for the roots of the degree-m section."""
    if m < 1:
        raise OutOfRange("m must be at least 1")
    mod = np.abs(rs.all_roots())
    return float(mod.min() / m), float(mod.max() / m)


def auto_tilt(
    pmf: Pmf, rs: RootSet | None = None, clearance: float = TILT_CLEARANCE
) -> tuple[Pmf, float, RootSet]:
    """Tilt by r in (0.9, 1) when a root is within ``clearance`` of the unit circle.

    Returns the (possibly) tilted PMF, the applied r and its roots; the
    roots of the tilted PMF are those of ``pmf`` divided by r.
    """
    rs = rs if rs is not None else pmf_roots(pmf)
    mod = np.abs(rs.roots)
    if unit_circle_clearance(mod, 1.0) >= clearance:
        return pmf, 1.0, rs
    r = suggest_tilt(rs)
    return tilt(pmf, r), r, rs.scaled(1.0 / r)
