"""PMFs on {0, ..., n}, their generating polynomials, and coefficient-side oracles.

Everything on the root side of the package is validated against the
extended-precision moment and cumulant routines in this module.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    AllZero,
    MTooLarge,
    NegativeWeight,
    NonFinite,
    NonPositiveR,
    NotNormalized,
    ParseError,
)

SUM_TOL = 1e-12
RENORMALIZE_TOL = 1e-9
MAX_CUMULANT = 20
# Base working precision (decimal digits) for coefficient-side oracles.
ORACLE_DIGITS = 60


@dataclass(frozen=True)
class PgfFactor:
    """One factor ``base((scale*z)**lattice) ** power`` of a product-form PGF.

    ``exp_section`` marks a base that is the normalized degree-n Taylor
    section of e^z, which root finding handles with a dedicated evaluator.
    """

    base: "Pmf"
    lattice: int = 1
    power: int = 1
    scale: float = 1.0
    exp_section: bool = False


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass on {0, ..., n}.

    ``log_probs`` optionally carries natural-log masses for PMFs whose
    smallest entries underflow double precision (high-order truncated
    Poisson coefficients); when present it is authoritative for the
    generating polynomial. ``factors`` records a known product structure
    of the PGF so that root finding can work factor by factor.
    """

    probs: np.ndarray
    log_probs: np.ndarray | None = None
    factors: tuple[PgfFactor, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise AllZero("empty probability vector")
        if not np.all(np.isfinite(p)):
            raise NonFinite("probabilities must be finite")
        if np.any(p < 0):
            raise NegativeWeight("probabilities must be nonnegative")
        total = math.fsum(p)
        if total <= 0:
            raise AllZero("at least one probability must be positive")
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise NotNormalized(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if self.log_probs is not None:
            lp = np.array(self.log_probs, dtype=np.float64).ravel()
            if lp.shape != p.shape:
                raise ValueError("log_probs must match probs in length")
            lp.setflags(write=False)
            object.__setattr__(self, "log_probs", lp)

    @classmethod
    def from_log_weights(cls, log_weights: Sequence[float]) -> "Pmf":
        """Normalize weights given as natural logs (``-inf`` for zero mass)."""
        lw = np.asarray(log_weights, dtype=np.float64)
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise NonFinite("log weights must be finite or -inf")
        top = lw.max()
        if top == -np.inf:
            raise AllZero("all weights are zero")
        shifted = np.exp(lw - top)
        log_norm = top + math.log(math.fsum(shifted))
        lp = lw - log_norm
        return cls(np.exp(lp), log_probs=lp)

    @property
    def n(self) -> int:
        return self.probs.size - 1

    @property
    def mean(self) -> float:
        return self._mean_var[0]

    @property
    def variance(self) -> float:
        return self._mean_var[1]

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.variance, 0.0))

    @cached_property
    def _mean_var(self) -> tuple[float, float]:
        return _mean_var_decimal(self.probs)

    def leaf_factors(self) -> tuple[PgfFactor, ...]:
        return self.factors if self.factors else (PgfFactor(self),)

    def polynomial(self) -> "Polynomial":
        return Polynomial(self.probs, log_abs=self.log_probs)


class Polynomial:
    """Polynomial with ascending coefficients.

    Trailing (high-degree) zero coefficients are trimmed on construction
    and their count kept in ``trimmed_high``. ``log_abs`` optionally holds
    ``log|a_j|`` for coefficient vectors whose dynamic range exceeds double
    precision.
    """

    __slots__ = ("coeffs", "log_abs", "trimmed_high")

    def __init__(self, coeffs, log_abs=None):
        c = np.asarray(coeffs)
        c = c.astype(np.complex128) if np.iscomplexobj(c) else c.astype(np.float64)
        c = np.atleast_1d(c).ravel()
        if log_abs is None:
            with np.errstate(divide="ignore"):
                la = np.log(np.abs(c))
        else:
            la = np.asarray(log_abs, dtype=np.float64).ravel()
            if la.shape != c.shape:
                raise ValueError("log_abs must match coeffs in length")
        nz = np.flatnonzero(la > -np.inf)
        top = int(nz[-1]) if nz.size else 0
        self.trimmed_high = c.size - 1 - top
        self.coeffs = c[: top + 1].copy()
        self.log_abs = la[: top + 1].copy()
        self.coeffs.setflags(write=False)
        self.log_abs.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.coeffs) or bool(np.all(self.coeffs.imag == 0))

    @property
    def log_height(self) -> float:
        return float(self.log_abs.max())

    @property
    def phases(self) -> np.ndarray:
        """Unit-modulus coefficient phases (1 for zero coefficients)."""
        c = self.coeffs.astype(np.complex128)
        mag = np.abs(c)
        out = np.ones_like(c)
        nz = mag > 0
        out[nz] = c[nz] / mag[nz]
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        acc = np.zeros_like(z)
        for a in self.coeffs[::-1]:
            acc = acc * z + a
        return acc

    def __repr__(self):
        return f"Polynomial(degree={self.degree})"


class CumulantSource(enum.Enum):
    COEFFICIENT_ORACLE = "coefficient_oracle"
    ROOT_BASED = "root_based"


@dataclass(frozen=True, eq=False)
class CumulantVector:
    values: np.ndarray
    source: CumulantSource

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size < 1:
            raise ValueError("cumulant vector must be nonempty")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __getitem__(self, m: int) -> float:
        """1-based access: ``cv[2]`` is the variance."""
        return float(self.values[m - 1])


def pmf_from_weights(weights: Sequence[float]) -> Pmf:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise AllZero("no weights given")
    if not np.all(np.isfinite(w)):
        raise NonFinite("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight("weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0:
        raise AllZero("at least one weight must be positive")
    return Pmf(w / total)


def point_mass(k: int) -> Pmf:
    p = np.zeros(k + 1)
    p[k] = 1.0
    return Pmf(p)


def _decimal_vector(p: np.ndarray) -> list[tuple[int, Decimal]]:
    return [(int(k), Decimal(float(p[k]))) for k in np.flatnonzero(p)]


def _mean_var_decimal(p: np.ndarray) -> tuple[float, float]:
    with localcontext() as ctx:
        ctx.prec = ORACLE_DIGITS
        s1 = Decimal(0)
        s2 = Decimal(0)
        for k, pk in _decimal_vector(p):
            kp = k * pk
            s1 += kp
            s2 += k * kp
        return float(s1), float(s2 - s1 * s1)


def mean_var(pmf: Pmf) -> tuple[float, float]:
    """Mean and variance from raw moments summed at 60 significant digits."""
    return pmf.mean, pmf.variance


def _shifted_raw_moments(pmf: Pmf, M: int, shift: int, prec: int) -> list[Decimal]:
    with localcontext() as ctx:
        ctx.prec = prec
        mom = [Decimal(0)] * (M + 1)
        for k, pk in _decimal_vector(pmf.probs):
            x = Decimal(k - shift)
            term = pk
            mom[0] += term
            for j in range(1, M + 1):
                term *= x
                mom[j] += term
        return mom


def cumulants_from_pmf(pmf: Pmf, M: int) -> CumulantVector:
    """Cumulants kappa_1..kappa_M by the moment-to-cumulant recurrence.

    Moments are taken about an integer near the mean (cumulants of order
    >= 2 are shift invariant) in decimal arithmetic whose precision grows
    with ``M * log10(n)`` to absorb the cancellation in the recurrence.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if M > MAX_CUMULANT:
        raise MTooLarge(f"M={M} exceeds the supported maximum {MAX_CUMULANT}")
    shift = int(round(pmf.mean))
    prec = ORACLE_DIGITS + int(M * math.log10(pmf.n + 2))
    mom = _shifted_raw_moments(pmf, M, shift, prec)
    with localcontext() as ctx:
        ctx.prec = prec
        kappa = [Decimal(0)] * (M + 1)
        for m in range(1, M + 1):
            acc = mom[m]
            for j in range(1, m):
                acc -= math.comb(m - 1, j - 1) * kappa[j] * mom[m - j]
            kappa[m] = acc
        kappa[1] += shift
        return CumulantVector([float(k) for k in kappa[1:]], CumulantSource.COEFFICIENT_ORACLE)


def central_moments(pmf: Pmf, K: int) -> list[float]:
    """E[(X - mu)^k] for k = 0..K, summed at extended precision."""
    prec = ORACLE_DIGITS + int(K * math.log10(pmf.n + 2))
    with localcontext() as ctx:
        ctx.prec = prec
        items = _decimal_vector(pmf.probs)
        mu = sum((k * pk for k, pk in items), Decimal(0))
        mom = [Decimal(0)] * (K + 1)
        for k, pk in items:
            x = k - mu
            term = pk
            mom[0] += term
            for j in range(1, K + 1):
                term *= x
                mom[j] += term
        return [float(v) for v in mom]


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Distribution of the independent sum; the PGF factorization is kept."""
    p = np.convolve(a.probs, b.probs)
    p = np.clip(p, 0.0, None)
    return Pmf(p / math.fsum(p), factors=a.leaf_factors() + b.leaf_factors())


def _tilt_leaf(pmf: Pmf, r: float) -> Pmf:
    if pmf.log_probs is not None:
        lp = pmf.log_probs
    else:
        with np.errstate(divide="ignore"):
            lp = np.log(pmf.probs)
    k = np.arange(lp.size, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        shifted = np.where(lp > -np.inf, lp + k * math.log(r), -np.inf)
    out = Pmf.from_log_weights(shifted)
    return out if pmf.log_probs is not None else Pmf(out.probs)


def tilt(pmf: Pmf, r: float) -> Pmf:
    """Exponential tilt p_k -> r^k p_k / P(r); PGF roots are divided by r."""
    if not (r > 0) or not math.isfinite(r):
        raise NonPositiveR(f"tilt parameter must be positive, got {r!r}")
    if r == 1.0:
        return pmf
    if not pmf.factors:
        return _tilt_leaf(pmf, r)
    flat = _tilt_leaf(Pmf(pmf.probs), r)
    factors = tuple(
        PgfFactor(f.base, f.lattice, f.power, f.scale * r, f.exp_section) for f in pmf.factors
    )
    return Pmf(flat.probs, factors=factors)


def load_pmf_json(source: str | Path) -> Pmf:
    """Read ``{"p": [...]}`` (sum within 1e-9 of one) or ``{"weights": [...]}``.

    ``source`` is a path, or a JSON document if it starts with ``{``.
    """
    text = str(source)
    try:
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read PMF JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("PMF JSON must be an object")
    try:
        if "p" in doc:
            return Pmf(np.asarray(doc["p"], dtype=np.float64))
        if "weights" in doc:
            return pmf_from_weights(np.asarray(doc["weights"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (NegativeWeight, AllZero, NonFinite, NotNormalized)):
            raise ParseError(str(exc)) from exc
        raise ParseError(f"malformed probability vector: {exc}") from exc
    raise ParseError('PMF JSON needs a "p" or "weights" array')
