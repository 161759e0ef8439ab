import math

import numpy as np
import pytest

from pgfclt import (
    BadEpsilon,
    FamilySpec,
    NTooSmall,
    OutOfRange,
    SweepSettings,
    bernoulli_product,
    binomial,
    cumulants_from_pmf,
    epsilon_scaled_family,
    family_sweep,
    min_dist_to_one,
    pmf_roots,
    scaled_truncated_poisson,
    tilt,
    truncated_poisson,
    variance_boost,
)
from pgfclt.families import SWEEP_COLUMNS, lattice_parameters
from pgfclt.verify import SZEGO_INNER


def test_truncated_poisson_small_orders():
    assert np.allclose(truncated_poisson(1).probs, [0.5, 0.5], atol=1e-16)
    assert np.allclose(truncated_poisson(2).probs, [0.4, 0.4, 0.2], atol=1e-16)
    assert truncated_poisson(20).mean == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(OutOfRange):
        truncated_poisson(0)


def test_truncated_poisson_large_order_is_consistent():
    lo, hi = truncated_poisson(170), truncated_poisson(171)
    assert np.allclose(lo.probs[:100], hi.probs[:100], rtol=1e-12, atol=0)
    assert hi.log_probs[-1] == pytest.approx(-math.lgamma(172) - 1.0, rel=1e-12)


def test_lattice_parameters():
    assert lattice_parameters(1000) == (7, 142)
    assert lattice_parameters(10_000) == (9, 1111)
    assert lattice_parameters(100_000) == (12, 8333)


def test_scaled_truncated_poisson_is_composition():
    for n in (8, 100, 1000, 10_000):
        pmf = scaled_truncated_poisson(n)
        k, m = lattice_parameters(n)
        assert pmf.n == k * m
        off = np.arange(pmf.n + 1) % k != 0
        assert not np.any(pmf.probs[off])
        assert np.allclose(pmf.probs[::k], truncated_poisson(m).probs, rtol=0, atol=1e-12)
    with pytest.raises(NTooSmall):
        scaled_truncated_poisson(7)


def test_scaled_truncated_poisson_sigma_tracks_log_n():
    sigma = scaled_truncated_poisson(10_000).sigma
    assert abs(sigma - math.log(10_000)) <= 0.15 * math.log(10_000)


@pytest.mark.parametrize("n", [1000, 10_000])
def test_scaled_truncated_poisson_root_annulus(n):
    k, m = lattice_parameters(n)
    mod = np.abs(pmf_roots(scaled_truncated_poisson(n)).roots)
    assert mod.max() <= m ** (1 / k) * (1 + 1e-12)
    assert mod.min() >= (SZEGO_INNER * m) ** (1 / k)


@pytest.mark.xfail(strict=True, reason="min |1 - zeta| is below 1 at every desk-scale n; it tends to e - 1 only as the lattice step grows")
def test_scaled_truncated_poisson_roots_clear_one():
    for n in (100, 1000, 10_000):
        assert min_dist_to_one(pmf_roots(scaled_truncated_poisson(n))) > 1.0


def test_epsilon_scaled_family():
    pmf = epsilon_scaled_family(1000, 0.25)
    assert pmf.n == 1000 and not np.any(pmf.probs[1::2])
    assert pmf.probs[::2].size == 501
    assert np.abs(pmf_roots(pmf).roots).min() > 1000**0.25
    assert epsilon_scaled_family(1000, 0.1).probs[::5].size == 201
    for bad in (0.0, 0.3, -1.0):
        with pytest.raises(BadEpsilon):
            epsilon_scaled_family(1000, bad)


def test_variance_boost():
    base = scaled_truncated_poisson(1000)
    out = variance_boost(base, 2.0)
    t = math.ceil(16 * base.variance)
    assert out.variance == pytest.approx(base.variance + t / 4, rel=1e-12)
    assert out.sigma >= 2 * base.sigma
    got = np.sort_complex(pmf_roots(out).roots)
    want = np.sort_complex(np.concatenate([pmf_roots(base).roots, -np.ones(t)]))
    assert np.allclose(got, want, atol=1e-8, rtol=0)
    assert np.array_equal(tilt(out, 1.0).probs, out.probs)
    with pytest.raises(OutOfRange):
        variance_boost(base, 0.0)


def test_bernoulli_product():
    q = np.full(30, 0.5)
    assert np.allclose(bernoulli_product(q).probs, binomial(30, 0.5).probs, atol=1e-15)
    q = np.array([0.1, 0.4, 0.4, 0.75, 0.9, 0.33])
    pmf = bernoulli_product(q)
    z = pmf_roots(pmf).roots
    assert np.all(np.abs(z.imag) <= 1e-8) and np.all(z.real <= 0)
    assert np.allclose(np.sort(z.real), np.sort(-(1 - q) / q), rtol=1e-10)
    k = cumulants_from_pmf(pmf, 4).values
    parts = sum(cumulants_from_pmf(bernoulli_product([x]), 4).values for x in q)
    assert np.allclose(k, parts, rtol=1e-9, atol=1e-13)
    with pytest.raises(OutOfRange):
        bernoulli_product([1.2])


def test_binomial_edges():
    assert binomial(0, 0.3).probs.tolist() == [1.0]
    assert binomial(4, 1.0).probs.tolist() == [0, 0, 0, 0, 1.0]
    assert binomial(4, 0.0).probs.tolist() == [1.0]
    assert binomial(3, 0.5).probs == pytest.approx([1 / 8, 3 / 8, 3 / 8, 1 / 8])


def test_family_spec_validation(tmp_path):
    with pytest.raises(OutOfRange):
        FamilySpec("nope")
    with pytest.raises(OutOfRange):
        FamilySpec("binomial", (10, 5))
    with pytest.raises(OutOfRange):
        FamilySpec("binomial", p=1.5)
    with pytest.raises(OutOfRange):
        FamilySpec("boosted")
    with pytest.raises(OutOfRange):
        FamilySpec("custom")
    with pytest.raises(BadEpsilon):
        FamilySpec("epsilon_scaled", eps=0.5)
    f = tmp_path / "p.json"
    f.write_text('{"p": [0.5, 0.5]}')
    assert FamilySpec("custom", (1,), path=str(f)).build(1).n == 1


def test_sweep_binomial_decreasing_ks():
    rows = family_sweep(FamilySpec("binomial", (100, 1000, 10_000)))
    assert [r["n"] for r in rows] == [100, 1000, 10_000]
    ks = [r["ks_normal"] for r in rows]
    assert ks[0] > ks[1] > ks[2]
    assert set(rows[0]) == set(SWEEP_COLUMNS)


def test_sweep_scaled_poisson_stays_away_from_normal():
    rows = family_sweep(FamilySpec("scaled_truncated_poisson", (1000, 10_000)))
    assert all(r["ks_normal"] >= 0.05 for r in rows)
    assert [r["k_lattice"] for r in rows] == [7, 9]


def test_sweep_empty_and_errors():
    assert family_sweep(FamilySpec("binomial")) == []
    spec = FamilySpec("scaled_truncated_poisson", (5, 20))
    with pytest.raises(NTooSmall) as info:
        family_sweep(spec)
    assert info.value.n == 5
    rows = family_sweep(spec, on_error="record")
    assert rows[0]["error"].startswith("NTooSmall") and rows[1]["error"] == ""


def test_sweep_parallel_matches_serial():
    spec = FamilySpec("binomial", (50, 200, 400, 800), p=0.3)
    settings = SweepSettings(delta=0.2)
    assert family_sweep(spec, settings, workers=3) == family_sweep(spec, settings)
