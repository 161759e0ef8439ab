"""Cumulants from PGF roots, the exponential form of a PGF, Stirling numbers
and the higher-cumulant tail bound."""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    MTooLarge,
    NumericalError,
    OutOfRange,
    OutsideDomain,
    ThetaTooLarge,
    TruncationInsufficient,
)
from .poly_core import MAX_CUMULANT, CumulantSource, CumulantVector
from .root_engine import RootProfile

TAIL_TOL = 1e-12
IMAG_TOL = 1e-8
STIRLING_MAX = 200


@dataclass(frozen=True, eq=False)
class ExpFormTerms:
    """Coefficients of log P(z) = -sum T_k/k (z^k - 1) - sum S_k/k (z^-k - 1) + R log z.

    ``tail_estimate`` bounds the truncation error of the series on the unit
    circle. ``delta`` is the distance from 1 to the nearest root; ``outside``
    and ``inside`` keep the roots so points where the truncated series is not
    certified can still be evaluated exactly.
    """

    T_over_k: np.ndarray
    S_over_k: np.ndarray
    R: int
    K: int
    tail_estimate: float
    delta: float
    outside: np.ndarray
    inside: np.ndarray

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if not self.tail_estimate >= 0:
            raise ValueError("tail_estimate must be nonnegative")


def _check_m(M: int) -> None:
    if M < 1:
        raise OutOfRange("M must be at least 1")
    if M > MAX_CUMULANT:
        raise MTooLarge(f"M = {M} exceeds the cap of {MAX_CUMULANT}")


def _weighted_tail(q: float, K: int, power: int) -> float:
    """Upper bound on sum_{k>K} k^power q^k for 0 <= q < 1 (inf if not yet decreasing)."""
    if q == 0.0:
        return 0.0
    ratio = q * ((K + 2) / (K + 1)) ** power
    if ratio >= 1.0:
        return math.inf
    return (K + 1) ** power * q ** (K + 1) / (1.0 - ratio)


def _discard_imag(v: np.ndarray, name: str) -> np.ndarray:
    bad = np.abs(v.imag) > IMAG_TOL * (1.0 + np.abs(v.real))
    if np.any(bad):
        m = int(np.flatnonzero(bad)[0]) + 1
        raise NumericalError(
            f"{name}_{m} has imaginary part {v.imag[m - 1]:.3g}; roots are not conjugate-closed"
        )
    return v.real.copy()


def _eulerian_weights(m: int) -> list[int]:
    """S(m-1, j) j! for j = 1..m-1."""
    return [stirling2(m - 1, j) * math.factorial(j) for j in range(1, m)]


def _g(x: np.ndarray, m: int) -> np.ndarray:
    """sum_{k>=1} k^(m-1) x^k for |x| < 1, summed in closed form."""
    if x.size == 0:
        return np.zeros(0, np.complex128)
    one_minus = 1.0 - x
    if m == 1:
        return x / one_minus
    u = x / one_minus
    acc = np.zeros_like(x)
    for c in reversed(_eulerian_weights(m)):
        acc = (acc + c) * u
    return acc / one_minus


def _ab_closed(profile: RootProfile, M: int) -> tuple[np.ndarray, np.ndarray]:
    xo = 1.0 / profile.outside
    xi = profile.inside
    A = np.array([_g(xo, m).sum() for m in range(1, M + 1)], dtype=np.complex128)
    B = np.array([(-1) ** m * _g(xi, m).sum() for m in range(1, M + 1)], dtype=np.complex128)
    return A, B


def _ab_direct(profile: RootProfile, M: int) -> tuple[np.ndarray, np.ndarray]:
    K = profile.K
    tail = 0.0
    if profile.outside.size:
        tail += profile.outside.size * _weighted_tail(1.0 / profile.alpha, K, M - 1)
    if profile.inside.size:
        tail += profile.inside.size * _weighted_tail(1.0 / profile.beta, K, M - 1)
    if not tail < TAIL_TOL:
        raise TruncationInsufficient(
            f"truncation K = {K} leaves a tail of {tail:.3g} for M = {M}; need < {TAIL_TOL:g}"
        )
    k = np.arange(1, K + 1, dtype=np.float64)
    A = np.array([np.sum(profile.T * k ** (m - 1)) for m in range(1, M + 1)])
    B = np.array([(-1) ** m * np.sum(profile.S * k ** (m - 1)) for m in range(1, M + 1)])
    return A, B


def ab_coefficients(
    profile: RootProfile, M: int, method: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """A_m = sum_k T_k k^(m-1) and B_m = (-1)^m sum_k S_k k^(m-1), m = 1..M.

    ``method="direct"`` sums the truncated power sums of ``profile`` and
    raises :class:`TruncationInsufficient` when the certified tail is too
    large. ``"closed"`` sums each root's geometric-type series exactly; it
    is what ``"auto"`` uses, since direct sums lose everything once a root
    modulus is close to 1.
    """
    _check_m(M)
    if method == "direct":
        A, B = _ab_direct(profile, M)
    elif method in ("auto", "closed"):
        A, B = _ab_closed(profile, M)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _discard_imag(A, "A"), _discard_imag(B, "B")


def cumulants_from_roots(profile: RootProfile, M: int, method: str = "auto") -> CumulantVector:
    """kappa_1 = R - A_1 - B_1 and kappa_m = -(A_m + B_m) for m >= 2."""
    A, B = ab_coefficients(profile, M, method)
    kappa = -(A + B)
    kappa[0] += profile.R
    return CumulantVector(kappa, CumulantSource.ROOT_BASED)


def _series_tail(q: float, K: int, count: int) -> float:
    """Bound on count * sum_{k>K} q^k / k."""
    if count == 0 or q == 0.0:
        return 0.0
    if q >= 1.0:
        return math.inf
    return count * q ** (K + 1) / ((K + 1) * (1.0 - q))


def _tail_at(terms: ExpFormTerms, rz: float, K: int | None = None) -> float:
    """Truncation bound for the series cut at K terms, at a point of modulus rz."""
    K = terms.K if K is None else K
    a = float(np.abs(terms.outside).min()) if terms.outside.size else math.inf
    b = float(np.abs(terms.inside).max()) if terms.inside.size else 0.0
    t = _series_tail(rz / a, K, terms.outside.size) + _series_tail(1.0 / a, K, terms.outside.size)
    t += _series_tail(b / rz, K, terms.inside.size) + _series_tail(b, K, terms.inside.size)
    return t


def _series_order(terms: ExpFormTerms, rz: float, tol: float) -> int:
    """Shortest certified truncation at modulus rz, or 0 if K terms do not suffice."""
    if _tail_at(terms, rz, terms.K) > tol:
        return 0
    lo, hi = 1, terms.K
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_at(terms, rz, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def exp_form_terms(profile: RootProfile) -> ExpFormTerms:
    k = np.arange(1, profile.K + 1, dtype=np.float64)
    roots = np.concatenate([profile.outside, profile.inside])
    delta = float(np.abs(1.0 - roots).min()) if roots.size else math.inf
    if profile.zero_root_count:
        delta = min(delta, 1.0)
    terms = ExpFormTerms(
        T_over_k=profile.T / k,
        S_over_k=profile.S / k,
        R=profile.R,
        K=profile.K,
        tail_estimate=0.0,
        delta=delta,
        outside=profile.outside,
        inside=profile.inside,
    )
    object.__setattr__(terms, "tail_estimate", _tail_at(terms, 1.0))
    return terms


def _log_exact(terms: ExpFormTerms, z: complex) -> complex:
    """Sum of per-root logarithms; agrees with the series wherever it converges."""
    acc = 0j
    for w in terms.outside:
        acc += cmath.log(1.0 - z / w) - cmath.log(1.0 - 1.0 / w)
    for w in terms.inside:
        acc += cmath.log(1.0 - w / z) - cmath.log(1.0 - w)
    return acc + terms.R * cmath.log(z)


def exp_form_eval(terms: ExpFormTerms, z: complex, tol: float = 1e-12) -> complex:
    """P(z) from the exponential form, for |z - 1| below the nearest-root distance.

    The truncated power series is used when its certified tail is below
    ``tol``; otherwise each root's logarithm is summed in closed form.
    """
    z = complex(z)
    if z == 1:
        return 1.0 + 0j
    if not abs(z - 1.0) < terms.delta:
        raise OutsideDomain(
            f"|z - 1| = {abs(z - 1.0):.3g} is not below the root distance {terms.delta:.3g}"
        )
    if z == 0:
        raise OutsideDomain("z = 0 is outside the domain")
    K = _series_order(terms, abs(z), tol)
    log_p = math.nan
    if K:
        k = np.arange(1, K + 1, dtype=np.float64)
        with np.errstate(all="ignore"):
            zk = np.exp(k * cmath.log(z))
            log_p = -np.sum(terms.T_over_k[:K] * (zk - 1.0)) - np.sum(terms.S_over_k[:K] * (1.0 / zk - 1.0))
        log_p += terms.R * cmath.log(z)
    if not cmath.isfinite(log_p):
        log_p = _log_exact(terms, z)
    return cmath.exp(log_p)


_stirling_lock = threading.Lock()


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for k in range(1, n + 1):
        row[k] = (k * prev[k] if k < n else 0) + prev[k - 1]
    return tuple(row)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, exact, for 0 <= k <= n <= 200."""
    if not (0 <= k <= n <= STIRLING_MAX):
        raise OutOfRange(f"stirling2 needs 0 <= k <= n <= {STIRLING_MAX}, got n={n}, k={k}")
    with _stirling_lock:
        # Build rows bottom-up so the recursion never gets deep.
        for i in range(n + 1):
            _stirling_row(i)
    return _stirling_row(n)[k]


def cumulant_tail_bound(delta: float, theta: float, M: int) -> float:
    """(1 / (2 delta)) q^M / (1 - q) with q = |theta e / delta|."""
    if not delta > 0:
        raise OutOfRange("delta must be positive")
    if M < 1:
        raise OutOfRange("M must be at least 1")
    q = abs(theta * math.e / delta)
    if q >= 1.0:
        raise ThetaTooLarge(f"|theta e / delta| = {q:.3g} must be below 1")
    return q**M / (1.0 - q) / (2.0 * delta)


def ck_coefficients(T, k: int) -> float:
    """C_k = sum_j j^(k-1) T_j."""
    t = np.asarray(T, dtype=np.float64).ravel()
    if k < 2:
        raise OutOfRange("k must be at least 2")
    if t.size == 0:
        raise OutOfRange("T must be nonempty")
    j = np.arange(1, t.size + 1, dtype=np.float64)
    return float(np.sum(j ** (k - 1) * t))
