import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgfclt import (
    DegreeZero,
    Pmf,
    Polynomial,
    RootOnUnitCircle,
    RootSet,
    convolve,
    exp_section_roots,
    find_roots,
    min_dist_to_one,
    newton_power_sums,
    pmf_from_weights,
    pmf_roots,
    root_profile,
    tilt,
)
from pgfclt.families import truncated_poisson
from pgfclt.root_engine import default_truncation, suggest_tilt, unit_circle_clearance


def _rs(*roots):
    z = np.asarray(roots, dtype=np.complex128)
    return RootSet(z, np.zeros(z.size))


def _sorted(z):
    z = np.asarray(z)
    return z[np.lexsort((np.round(z.imag, 9), np.round(z.real, 9)))]


def _match(a, b):
    """Largest distance under a greedy nearest pairing of two multisets."""
    b = list(b)
    worst = 0.0
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(j)))
    return worst


def test_linear_and_quadratic():
    rs = find_roots(Polynomial([2 / 3, 1 / 3]))
    assert rs.roots.tolist() == [-2.0]
    rs = find_roots(Polynomial([0.5, 0.0, 0.5]))
    assert _match(rs.roots, [1j, -1j]) < 1e-14


def test_truncated_poisson_matches_companion_matrix():
    p = truncated_poisson(4)
    got = find_roots(p.polynomial()).roots
    want = np.polynomial.polynomial.polyroots(p.probs)
    assert got.size == 4
    assert _match(got, want) < 1e-8


def test_degree_zero():
    with pytest.raises(DegreeZero):
        find_roots(Polynomial([1.0]))
    with pytest.raises(DegreeZero):
        newton_power_sums(Polynomial([1.0]), 3)


def test_zero_roots_are_counted():
    rs = pmf_roots(Pmf([0.0, 0.0, 0.5, 0.5]))
    assert rs.zero_root_count == 2
    assert rs.degree == 3
    assert rs.roots.tolist() == [-1.0]
    assert min_dist_to_one(rs) == 1.0
    assert rs.all_roots().size == 3


def test_newton_power_sums_examples():
    assert np.allclose(newton_power_sums(Polynomial([1.0, 0.0, 1.0]), 2), [0, -2], atol=1e-15)
    assert np.allclose(newton_power_sums(Polynomial([2.0, 1.0]), 1), [-2], atol=1e-15)


def test_power_sums_degree_20(rng):
    p = pmf_from_weights(rng.uniform(size=21))
    z = pmf_roots(p).all_roots()
    nw = newton_power_sums(p.polynomial(), 10)
    direct = np.array([np.sum(z**k) for k in range(1, 11)])
    assert np.all(np.abs(direct - nw) <= 1e-8 * np.abs(nw))


@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_root_count_and_conjugate_closure(d, seed):
    rng = np.random.default_rng(seed)
    p = pmf_from_weights(rng.uniform(size=d + 1))
    rs = pmf_roots(p)
    assert rs.roots.size + rs.zero_root_count == p.polynomial().degree
    assert np.array_equal(np.sort_complex(rs.roots), np.sort_complex(np.conj(rs.roots)))
    assert np.all(rs.residuals <= 1e-10)


@given(st.integers(2, 30), st.integers(0, 2**32 - 1), st.floats(0.5, 2.0))
@settings(max_examples=30, deadline=None)
def test_tilt_divides_roots(d, seed, r):
    rng = np.random.default_rng(seed)
    p = pmf_from_weights(rng.uniform(size=d + 1))
    before = np.sort(np.abs(pmf_roots(p).roots)) / r
    after = np.sort(np.abs(pmf_roots(tilt(p, r)).roots))
    assert np.allclose(after, before, rtol=1e-8, atol=0)


def test_factor_structure_and_flat_solve_agree():
    a = pmf_from_weights([1, 2, 3, 1])
    b = pmf_from_weights([2, 1, 1])
    c = convolve(a, b)
    flat = find_roots(Pmf(c.probs).polynomial()).roots
    assert _match(pmf_roots(c).roots, flat) < 1e-8


def test_lattice_roots():
    # P(z) = (1 + z^3) / 2 has the three cube roots of -1.
    rs = pmf_roots(Pmf([0.5, 0, 0, 0.5]))
    want = np.exp(1j * math.pi * np.array([1, 3, 5]) / 3)
    assert _match(rs.roots, want) < 1e-14


def test_exp_section_roots_large_order():
    rs = exp_section_roots(500)
    assert rs.roots.size == 500
    assert np.abs(rs.roots).max() <= 500
    assert np.array_equal(np.sort_complex(rs.roots), np.sort_complex(np.conj(rs.roots)))
    small = exp_section_roots(12).roots
    coeffs = [1 / math.factorial(k) for k in range(13)]
    nw = newton_power_sums(Polynomial(coeffs), 4)
    direct = np.array([np.sum(small**k) for k in range(1, 5)])
    assert np.allclose(direct, nw, rtol=1e-9)


def test_root_profile_outside():
    prof = root_profile(_rs(-2.0), K=3)
    assert np.allclose(prof.T, [-0.5, 0.25, -0.125])
    assert np.all(prof.S == 0)
    assert prof.R == 0
    assert np.allclose(prof.Tstar, [0.5, 0.25, 0.125])


def test_root_profile_inside():
    prof = root_profile(_rs(0.5), K=2)
    assert np.allclose(prof.S, [0.5, 0.25])
    assert np.all(prof.T == 0)
    assert prof.R == 1


def test_root_profile_conjugate_pair():
    prof = root_profile(_rs(2j, -2j), K=2)
    assert prof.T[0] == pytest.approx(0)
    assert prof.T[1].real == pytest.approx(-0.5)
    assert abs(prof.T[1].imag) <= 1e-15


def test_root_profile_zero_roots():
    prof = root_profile(RootSet(np.array([-2.0 + 0j]), np.zeros(1), zero_root_count=2), K=4)
    assert prof.R == 2
    assert np.all(np.isinf(prof.Tstar))


def test_root_profile_bound_and_monotone(rng):
    p = tilt(pmf_from_weights(rng.uniform(size=15)), 0.8)
    rs = pmf_roots(p)
    prof = root_profile(rs)
    out = prof.outside
    alpha = np.abs(out).min()
    k = np.arange(1, prof.K + 1)
    assert np.all(np.abs(prof.T) <= out.size * alpha ** (-k.astype(float)) * (1 + 1e-12))
    if prof.inside.size == 0:
        assert np.all(np.diff(prof.Tstar) <= 0)


def test_root_profile_default_truncation():
    assert default_truncation(2.0) == max(64, 8 * math.ceil(math.log(1e15) / math.log(2.0)))
    assert default_truncation(math.inf) == 64
    assert root_profile(_rs(-2.0)).K == default_truncation(2.0)


def test_unit_circle_guard():
    with pytest.raises(RootOnUnitCircle) as info:
        root_profile(_rs(1j, -1j))
    r = info.value.suggested_r
    assert 0.9 < r < 1.0
    with pytest.raises(ValueError):
        root_profile(_rs(-2.0), K=1)


def test_suggest_tilt_clears_circle():
    rs = pmf_roots(pmf_from_weights(np.ones(6)))
    assert unit_circle_clearance(np.abs(rs.roots), 1.0) < 1e-9
    r = suggest_tilt(rs)
    assert unit_circle_clearance(np.abs(rs.roots), r) > 0.05


def test_min_dist_to_one():
    assert min_dist_to_one(_rs(-2.0)) == 3.0
    assert min_dist_to_one(_rs(1j, -1j)) == pytest.approx(math.sqrt(2))

