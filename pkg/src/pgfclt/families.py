"""Named distribution families: truncated Poisson, its lattice-scaled
versions, variance boosting, binomials and Bernoulli products."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from scipy.special import gammaln

from .errors import BadEpsilon, NTooSmall, OutOfRange, PgfCltError
from .poly_core import PgfFactor, Pmf, convolve, load_pmf_json, point_mass

EXACT_FACTORIAL_MAX = 170
FAMILY_KINDS = (
    "binomial",
    "bernoulli_product",
    "truncated_poisson",
    "scaled_truncated_poisson",
    "epsilon_scaled",
    "boosted",
    "custom",
)


def _truncated_poisson_probs(m: int) -> tuple[np.ndarray, np.ndarray]:
    if m <= EXACT_FACTORIAL_MAX:
        w = [Fraction(1, math.factorial(k)) for k in range(m + 1)]
        c = sum(w)
        probs = np.array([float(x / c) for x in w])
        return probs, np.log(probs)
    lw = -gammaln(np.arange(m + 1, dtype=np.float64) + 1.0)
    top = lw.max()
    log_c = top + math.log(math.fsum(np.exp(lw - top)))
    lp = lw - log_c
    return np.exp(lp), lp


def truncated_poisson(m: int) -> Pmf:
    """Poisson(1) conditioned on being at most m."""
    if m < 1:
        raise OutOfRange("m must be at least 1")
    probs, lp = _truncated_poisson_probs(m)
    base = Pmf(probs, log_probs=lp)
    return Pmf(probs, log_probs=lp, factors=(PgfFactor(base, exp_section=True),))


def _lattice_scaled(m: int, k: int) -> Pmf:
    tp = truncated_poisson(m)
    lp = np.full(m * k + 1, -np.inf)
    lp[::k] = tp.log_probs
    probs = np.zeros(m * k + 1)
    probs[::k] = tp.probs
    base = tp.leaf_factors()[0].base
    return Pmf(probs, log_probs=lp, factors=(PgfFactor(base, lattice=k, exp_section=True),))


def lattice_parameters(n: int) -> tuple[int, int]:
    """(k, m) with k = round(ln n) and m = floor(n / k)."""
    k = int(round(math.log(n)))
    return k, n // k


def scaled_truncated_poisson(n: int) -> Pmf:
    """k T_m with k = round(ln n), m = floor(n / k); PGF is P_m(z^k)."""
    if n < 8:
        raise NTooSmall(f"n must be at least 8, got {n}")
    k, m = lattice_parameters(n)
    return _lattice_scaled(m, k)


def epsilon_scaled_family(n: int, eps: float) -> Pmf:
    """k T_m with k = round(1 / (2 eps)), m = floor(n / k)."""
    if not (0.0 < eps <= 0.25):
        raise BadEpsilon(f"eps must lie in (0, 1/4], got {eps!r}")
    k = int(round(1.0 / (2.0 * eps)))
    m = n // k
    if m < 1:
        raise NTooSmall(f"n = {n} is below the lattice step {k}")
    return _lattice_scaled(m, k)


def binomial(n: int, p: float) -> Pmf:
    """Binomial(n, p), keeping the factor (1 - p + p z)^n."""
    if n < 0:
        raise OutOfRange("n must be nonnegative")
    if not (0.0 <= p <= 1.0):
        raise OutOfRange(f"p must lie in [0, 1], got {p!r}")
    if p == 0.0 or n == 0:
        return point_mass(0)
    if p == 1.0:
        return Pmf(point_mass(n).probs, factors=(PgfFactor(point_mass(1), power=n),))
    k = np.arange(n + 1, dtype=np.float64)
    lp = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0) + k * math.log(p) + (n - k) * math.log1p(-p)
    probs = np.exp(lp)
    probs /= math.fsum(probs)
    return Pmf(probs, factors=(PgfFactor(Pmf([1.0 - p, p]), power=n),))


def bernoulli_product(q) -> Pmf:
    """Sum of independent Bernoulli(q_i); PGF prod (q_i z + 1 - q_i)."""
    q = np.asarray(q, dtype=np.float64).ravel()
    if np.any(~np.isfinite(q)) or np.any((q < 0) | (q > 1)):
        raise OutOfRange("every q_i must lie in [0, 1]")
    parts = [binomial(count, qi) for qi, count in sorted(Counter(q.tolist()).items()) if qi > 0.0]
    if not parts:
        return point_mass(0)
    out = parts[0]
    for part in parts[1:]:
        out = convolve(out, part)
    return out


def variance_boost(pmf: Pmf, C: float) -> Pmf:
    """Add an independent Binomial(t, 1/2), t = ceil((2C)^2 sigma^2); adds t roots at -1."""
    if not C > 0:
        raise OutOfRange("C must be positive")
    t = math.ceil((2.0 * C) ** 2 * pmf.variance)
    if t == 0:
        return pmf
    return convolve(pmf, binomial(t, 0.5))


@dataclass(frozen=True)
class FamilySpec:
    """A family of PMFs indexed by n, plus the n values to sweep."""

    kind: str
    sweep: tuple[int, ...] = ()
    p: float = 0.5
    q: tuple[float, ...] = ()
    C: float = 1.0
    eps: float = 0.25
    inner: "FamilySpec | None" = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise OutOfRange(f"unknown family {self.kind!r}; expected one of {', '.join(FAMILY_KINDS)}")
        sweep = tuple(int(n) for n in self.sweep)
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise OutOfRange("sweep must be strictly increasing")
        if any(n < 1 for n in sweep):
            raise OutOfRange("sweep values must be at least 1")
        object.__setattr__(self, "sweep", sweep)
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if not (0.0 <= self.p <= 1.0) or any(not (0.0 <= x <= 1.0) for x in self.q):
            raise OutOfRange("probabilities must lie in [0, 1]")
        if self.kind == "bernoulli_product" and not self.q:
            raise OutOfRange("bernoulli_product needs q values")
        if self.kind == "boosted":
            if self.inner is None:
                raise OutOfRange("boosted family needs an inner family")
            if not self.C > 0:
                raise OutOfRange("C must be positive")
        if self.kind == "custom" and not self.path:
            raise OutOfRange("custom family needs a PMF file path")
        if self.kind == "epsilon_scaled" and not (0.0 < self.eps <= 0.25):
            raise BadEpsilon(f"eps must lie in (0, 1/4], got {self.eps!r}")

    def k_lattice(self, n: int) -> int:
        if self.kind == "scaled_truncated_poisson":
            return lattice_parameters(n)[0]
        if self.kind == "epsilon_scaled":
            return int(round(1.0 / (2.0 * self.eps)))
        return 1

    def build(self, n: int) -> Pmf:
        if self.kind == "binomial":
            return binomial(n, self.p)
        if self.kind == "bernoulli_product":
            reps = -(-n // len(self.q))
            return bernoulli_product(np.tile(self.q, reps)[:n])
        if self.kind == "truncated_poisson":
            return truncated_poisson(n)
        if self.kind == "scaled_truncated_poisson":
            return scaled_truncated_poisson(n)
        if self.kind == "epsilon_scaled":
            return epsilon_scaled_family(n, self.eps)
        if self.kind == "boosted":
            return variance_boost(self.inner.build(n), self.C)
        return load_pmf_json(self.path)


@dataclass(frozen=True)
class SweepSettings:
    delta: float = 0.1
    k: int = 2
    theta_max: float = 3.0
    grid: int = 61
    tol: float = 1e-10


SWEEP_COLUMNS = (
    "n",
    "k_lattice",
    "sigma",
    "min_dist_to_one",
    "Tstar_k",
    "N_delta",
    "N_delta_over_sigma3",
    "ks_normal",
    "cf_dist",
    "M_3",
    "M_4",
    "error",
)


def sweep_record(spec: FamilySpec, n: int, settings: SweepSettings) -> dict[str, Any]:
    from . import diagnostics
    from .root_engine import pmf_roots

    pmf = spec.build(n)
    rs = pmf_roots(pmf, settings.tol)
    sigma = pmf.sigma
    region = diagnostics.check_region(rs, sigma, settings.delta)
    power = diagnostics.check_power_sum(rs, settings.k)
    return {
        "n": n,
        "k_lattice": spec.k_lattice(n),
        "sigma": sigma,
        "min_dist_to_one": region.measured["min_dist_to_one"],
        "Tstar_k": power.measured["Tstar_k"],
        "N_delta": int(region.measured["N_delta"]),
        "N_delta_over_sigma3": region.measured["N_delta_over_sigma3"],
        "ks_normal": diagnostics.ks_to_normal(pmf),
        "cf_dist": diagnostics.cf_distance(pmf, settings.theta_max, settings.grid),
        "M_3": diagnostics.standardized_moment(pmf, 3),
        "M_4": diagnostics.standardized_moment(pmf, 4),
        "error": "",
    }


def family_sweep(
    spec: FamilySpec,
    settings: SweepSettings | None = None,
    on_error: str = "raise",
    workers: int = 1,
) -> list[dict[str, Any]]:
    """One diagnostics record per n, ordered by n.

    With ``on_error="record"`` a failing n yields a row whose ``error``
    column names the exception; otherwise the exception propagates with an
    ``n`` attribute naming the failing member.
    """
    settings = settings or SweepSettings()
    if on_error not in ("raise", "record"):
        raise ValueError("on_error must be 'raise' or 'record'")

    def one(n: int) -> dict[str, Any]:
        try:
            return sweep_record(spec, n, settings)
        except PgfCltError as exc:
            if on_error == "raise":
                exc.n = n
                raise
            row = {c: math.nan for c in SWEEP_COLUMNS}
            row.update(n=n, k_lattice=spec.k_lattice(n), N_delta=-1, error=f"{type(exc).__name__}: {exc}")
            return row

    if workers > 1 and len(spec.sweep) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, spec.sweep))
    else:
        rows = [one(n) for n in spec.sweep]
    return sorted(rows, key=lambda r: r["n"])
