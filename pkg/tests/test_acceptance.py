"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from conftest import CRITERIA_LINES
from pgfclt import (
    FamilySpec,
    binomial,
    check_large_var,
    exp_section_roots,
    family_sweep,
    ks_to_normal,
    newton_power_sums,
    pmf_from_weights,
    pmf_roots,
    scaled_truncated_poisson,
    standardized_moment,
    szego_annulus_check,
)
from pgfclt.cli import main
from pgfclt.diagnostics import ks_between, standardized_poisson
from pgfclt.errors import PgfCltError
from pgfclt.region import central_moment_mk, in_region_s_many, m2_sign
from pgfclt.verify import (
    DEFAULT_SEED,
    cumulant_agreement,
    exp_form_agreement,
    factor_variance,
    random_pmf_corpus,
    region_grid,
    sample_tail_case,
    tail_case_holds,
)

FAMILY_NS = (1000, 10_000, 100_000)


def report(label, ok, detail):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    CRITERIA_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus():
    t = time.perf_counter()
    items = random_pmf_corpus(np.random.default_rng([DEFAULT_SEED, 0]), 200)
    return items, time.perf_counter() - t


@pytest.fixture(scope="module")
def family_members():
    t = time.perf_counter()
    out = {}
    for n in FAMILY_NS:
        pmf = scaled_truncated_poisson(n)
        out[n] = (pmf, pmf_roots(pmf))
    return out, time.perf_counter() - t


def test_criterion_1_cumulant_oracle(corpus):
    items, build = corpus
    t = time.perf_counter()
    results = [cumulant_agreement(it, 6) for it in items]
    elapsed = build + time.perf_counter() - t
    worst = max(u for _, u in results)
    ok = all(a for a, _ in results) and elapsed <= 60
    report("1", ok, f"{sum(a for a, _ in results)}/200 agree, worst {worst:.3g} tolerance units, {elapsed:.1f}s")


def test_criterion_2_exp_form(corpus):
    items, _ = corpus
    rng = np.random.default_rng([DEFAULT_SEED, 100])
    t = time.perf_counter()
    results = [exp_form_agreement(it, rng, 20) for it in items]
    elapsed = time.perf_counter() - t
    worst = max(e for _, e in results)
    ok = all(a for a, _ in results) and elapsed <= 30
    report("2", ok, f"{sum(a for a, _ in results)}/200 agree, worst error {worst:.3g}, {elapsed:.1f}s")


def test_criterion_3_tail_bound():
    rng = np.random.default_rng([DEFAULT_SEED, 1])
    t = time.perf_counter()
    bad = []
    for _ in range(1000):
        case = sample_tail_case(rng)
        ok, lhs, rhs = tail_case_holds(*case)
        if not ok:
            bad.append((case, lhs, rhs))
    elapsed = time.perf_counter() - t
    detail = f"{len(bad)} violations in 1000, {elapsed:.1f}s"
    if bad:
        (zeta, delta, theta, M, inside), lhs, rhs = bad[0]
        detail += f"; first: zeta={zeta:.6g} delta={delta:.6g} theta={theta:.6g} M={M} lhs={lhs:.6g} rhs={rhs:.6g}"
    report("3", not bad and elapsed <= 30, detail)


def test_criterion_4_region_moments():
    t = time.perf_counter()
    z = region_grid(200)
    signs = np.array([m2_sign(w) for w in z])
    mismatches = int(np.sum((signs <= 0) != in_region_s_many(z)))
    disagree = 0
    for w in z:
        try:
            for k in range(9):
                central_moment_mk(w, k)
        except PgfCltError:
            disagree += 1
    elapsed = time.perf_counter() - t
    ok = mismatches == 0 and disagree == 0 and elapsed <= 30
    report("4", ok, f"{z.size} grid points, {mismatches} sign mismatches, {disagree} form disagreements, {elapsed:.1f}s")


def test_criterion_5_variance_decomposition():
    rng = np.random.default_rng([DEFAULT_SEED, 3])
    worst = 0.0
    for _ in range(100):
        pmf = pmf_from_weights(rng.uniform(size=int(rng.integers(2, 42))))
        worst = max(worst, abs(factor_variance(pmf_roots(pmf)) - pmf.variance) / pmf.variance)
    report("5", worst <= 1e-6, f"worst relative error {worst:.3g}")


def test_criterion_6a_root_geometry(family_members):
    members, elapsed = family_members
    parts, ok = [], elapsed <= 180
    for n, (_, rs) in members.items():
        dist = float(np.abs(1 - rs.roots).min())
        mod = np.abs(rs.roots)
        good = dist > 1 and mod.min() >= 2 and mod.max() <= 1.2 * math.e
        ok &= good
        parts.append(f"n={n}: min|1-z|={dist:.4f} |z| in [{mod.min():.4f}, {mod.max():.4f}]")
    report("6a", ok, "; ".join(parts) + f"; {elapsed:.1f}s")


def test_criterion_6b_not_normal(family_members):
    members, _ = family_members
    ks = {n: ks_to_normal(pmf) for n, (pmf, _) in members.items()}
    report("6b", all(v >= 0.05 for v in ks.values()), ", ".join(f"n={n}: {v:.4f}" for n, v in ks.items()))


def test_criterion_6c_poisson_limit(family_members):
    members, _ = family_members
    d = ks_between(members[100_000][0], standardized_poisson())
    report("6c", d <= 0.02, f"KS to standardized Poisson(1) at n=1e5: {d:.3g}")


def test_criterion_6d_sigma_log_n(family_members):
    members, _ = family_members
    rel = {n: abs(pmf.sigma - math.log(n)) / math.log(n) for n, (pmf, _) in members.items()}
    report("6d", all(v <= 0.15 for v in rel.values()), ", ".join(f"n={n}: {v:.3f}" for n, v in rel.items()))


def test_criterion_7a_large_var_binomial():
    parts, ok = [], True
    for n in (1000, 10_000):
        pmf = binomial(n, 1 / 3)
        rep = check_large_var(pmf, pmf_roots(pmf), 0.4)
        ok &= rep.holds
        parts.append(f"n={n}: holds={rep.holds} sigma={rep.measured['sigma']:.3f} n^0.4={rep.measured['sigma_floor']:.3f}")
    report("7a", ok, "; ".join(parts))


def test_criterion_7b_binomial_ks():
    ks = [ks_to_normal(binomial(n, 1 / 3)) for n in (100, 1000, 10_000)]
    ok = ks[-1] <= 0.02 and ks[0] > ks[1] > ks[2]
    report("7b", ok, "KS " + ", ".join(f"{v:.4g}" for v in ks))


def test_criterion_8_moment_targets():
    pmf = binomial(2000, 0.5)
    m3, m4, m6 = (standardized_moment(pmf, k) for k in (3, 4, 6))
    ok = abs(m3) <= 1e-3 and 2.85 <= m4 <= 3.15 and 13.5 <= m6 <= 16.5
    report("8", ok, f"M3={m3:.3g} M4={m4:.5f} M6={m6:.4f}")


def test_criterion_9_root_finder():
    rng = np.random.default_rng([DEFAULT_SEED, 4])
    worst, closed = 0.0, True
    for _ in range(100):
        pmf = pmf_from_weights(rng.uniform(size=int(rng.integers(2, 52))))
        rs = pmf_roots(pmf)
        z = rs.all_roots()
        nw = newton_power_sums(pmf.polynomial(), 10)
        direct = np.array([np.sum(z**k) for k in range(1, 11)])
        worst = max(worst, float(np.max(np.abs(direct - nw) / np.abs(nw))))
        closed &= np.array_equal(np.sort_complex(rs.roots), np.sort_complex(np.conj(rs.roots)))
    highs = [szego_annulus_check(exp_section_roots(m), m)[1] for m in (8, 16, 32, 64)]
    ok = worst <= 1e-8 and closed and max(highs) <= 1 + 1e-8
    report("9", ok, f"worst power-sum error {worst:.3g}, closure {closed}, max ratio_high {max(highs):.6f}")


def test_criterion_10_determinism(tmp_path):
    outs = [tmp_path / f"verify{i}.txt" for i in range(2)]
    codes = [main(["verify", "--seed", str(DEFAULT_SEED), "--out", str(p)]) for p in outs]
    same_verify = outs[0].read_bytes() == outs[1].read_bytes() and codes[0] == codes[1]
    fam = [tmp_path / f"family{i}.csv" for i in range(2)]
    for p in fam:
        main(["family", "--family", "scaled-poisson", "--sweep", "1000,10000", "--out", str(p)])
    same_family = fam[0].read_bytes() == fam[1].read_bytes()
    report("10", same_verify and same_family, f"verify summaries identical: {same_verify}, family CSV identical: {same_family}")
