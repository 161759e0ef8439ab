"""Numba kernels for Aberth-Ehrlich iteration.

Two evaluators share one iteration loop:

* mode 0: Horner on log-scaled coefficients ``a_j = ph_j * exp(la_j)``.
  The running value is kept as ``(p, dp) * exp(s)`` so coefficient vectors
  spanning thousands of decades never overflow.
* mode 1: ``e_m(z) = sum_{j<=m} z^j / j!`` through
  ``e_m(z) = e^z - z^(m+1)/(m+1)! * 1F1(1; m+2; z)`` in log form. Horner on
  the section loses about ``m(rho - 1 - log rho)`` nats near its roots,
  which is hopeless beyond m ~ 40; this form loses only ``log|z|``-sized
  absolute error.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from numba import njit

EPS = 2.220446049250313e-16
TWO_PI = 2.0 * math.pi


@njit(cache=True)
def horner_scaled(la, ph, z):
    """Return (p, dp, ap, s): P = p e^s, P' = dp e^s, sum |a_j||z|^j = ap e^s."""
    d = la.size - 1
    s = la[d]
    p = ph[d]
    dp = 0j
    ap = 1.0
    az = abs(z)
    for j in range(d - 1, -1, -1):
        dp = dp * z + p
        p = p * z
        ap = ap * az
        lj = la[j]
        if lj > s + 600.0:
            f = math.exp(s - lj)
            p *= f
            dp *= f
            ap *= f
            s = lj
        if lj > -np.inf:
            t = math.exp(lj - s)
            p += ph[j] * t
            ap += t
        big = max(ap, abs(dp))
        if big > 1e200:
            p /= big
            dp /= big
            ap /= big
            s += math.log(big)
    return p, dp, ap, s


@njit(cache=True)
def _log_hyp_tail(m, z):
    """log of z^(m+1)/(m+1)! * sum_i z^i / ((m+2)...(m+1+i)); needs |z| < m+2."""
    phi = 1.0 + 0j
    t = 1.0 + 0j
    i = 1
    while True:
        t = t * z / (m + 1 + i)
        phi += t
        if abs(t) < 1e-18 * abs(phi) and abs(z) < m + 1 + i:
            break
        i += 1
        if i > 100000:
            break
    return (m + 1) * cmath.log(z) - math.lgamma(m + 2.0) + cmath.log(phi)


@njit(cache=True)
def _expm1c(w):
    x = w.real
    y = w.imag - TWO_PI * math.floor(w.imag / TWO_PI + 0.5)
    em = math.expm1(x)
    sh = math.sin(0.5 * y)
    re = em * math.cos(y) - 2.0 * sh * sh
    im = math.exp(x) * math.sin(y)
    return complex(re, im)


@njit(cache=True)
def log_exp_section(m, z):
    """Return (log e_m(z), noise) with noise an absolute error scale of the log."""
    lt = _log_hyp_tail(m, z)
    d = lt - z
    scale = EPS * (abs(lt) + abs(z) + 1.0)
    if d.real <= 0.0:
        v = -_expm1c(d)
        return z + cmath.log(v), scale / max(abs(v), 1e-300)
    v = _expm1c(-d)
    return lt + cmath.log(v), scale / max(abs(v), 1e-300)


@njit(cache=True)
def _newton_ratio(mode, m, la, ph, z, dflt_floor):
    """Return (P/P', at_noise_floor)."""
    if mode == 1 and abs(z) < m + 2 and z != 0:
        l0, noise0 = log_exp_section(m, z)
        l1, noise1 = log_exp_section(m - 1, z)
        r = cmath.exp(l0 - l1)
        # Absolute error of e_m near a root is about eps * |z| * |e^z|, so the
        # Newton step cannot resolve below that divided by |e_{m-1}(z)|.
        lt_mag = abs(l0) + abs(z) + 1.0
        step_noise = EPS * lt_mag * math.exp(min(z.real - l1.real, 700.0))
        return r, noise0 >= 0.05 or abs(r) <= 16.0 * step_noise
    p, dp, ap, s = horner_scaled(la, ph, z)
    if dp == 0:
        return complex(0.0, 0.0), abs(p) <= dflt_floor * ap
    return p / dp, abs(p) <= dflt_floor * ap


@njit(cache=True)
def aberth(la, ph, mode, m, x0, maxit):
    n = x0.size
    d = la.size - 1
    x = x0.copy()
    done = np.zeros(n, dtype=np.bool_)
    floor = 4.0 * EPS * max(1.0, math.sqrt(d))
    sweeps = 0
    for it in range(maxit):
        active = 0
        for i in range(n):
            if done[i]:
                continue
            active += 1
            z = x[i]
            ratio, at_floor = _newton_ratio(mode, m, la, ph, z, floor)
            if ratio == 0:
                done[i] = at_floor
                if not at_floor:
                    x[i] = z + 1e-3 * (abs(z) + 1.0) * complex(0.6, 0.8)
                continue
            acc = 0j
            for j in range(n):
                if j != i:
                    acc += 1.0 / (z - x[j])
            w = ratio / (1.0 - ratio * acc)
            x[i] = z - w
            if at_floor or abs(w) <= 4.0 * EPS * abs(z):
                done[i] = True
        sweeps = it + 1
        if active == 0:
            break
    return x, done, sweeps


@njit(cache=True)
def log_residuals(la, ph, mode, m, roots):
    """log|P(zeta)| per root, evaluated as in the iteration."""
    out = np.empty(roots.size)
    for i in range(roots.size):
        z = roots[i]
        if mode == 1 and abs(z) < m + 2 and z != 0:
            l0, noise = log_exp_section(m, z)
            out[i] = l0.real
        else:
            p, dp, ap, s = horner_scaled(la, ph, z)
            out[i] = (math.log(abs(p)) if p != 0 else -np.inf) + s
    return out
