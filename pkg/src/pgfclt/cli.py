"""Command-line entry point: ``pgf-clt analyze|family|roots|verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import diagnostics, verify
from .cumulants import cumulants_from_roots
from .errors import InvalidInput, NumericalError, PgfCltError, RootOnUnitCircle
from .families import FAMILY_KINDS, SWEEP_COLUMNS, FamilySpec, SweepSettings, family_sweep
from .poly_core import Pmf, cumulants_from_pmf, load_pmf_json
from .region import count_near_s
from .root_engine import min_dist_to_one, pmf_roots, root_profile

SCHEMA_LINE = "# pgf-clt schema v1"
ROOT_COLUMNS = ("re", "im", "modulus", "dist_to_one", "in_S", "dist_to_S", "m2", "residual")
REPORT_COLUMNS = ("section", "key", "value")
POWER_SUM_ORDERS = 8
NEAR_ZERO = 1e-3

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PROPERTY = 4

FAMILY_ALIASES = {
    "scaled-poisson": "scaled_truncated_poisson",
    "poisson": "truncated_poisson",
    "bernoulli": "bernoulli_product",
    "eps-scaled": "epsilon_scaled",
}


@dataclass
class RunConfig:
    command: str
    pmf: str | None = None
    family: FamilySpec | None = None
    n: int | None = None
    delta: float = 0.1
    eps: float = 0.25
    k: int = 2
    max_cumulant: int = 6
    theta_max: float = 3.0
    grid_points: int = 61
    tol: float = 1e-10
    out: str | None = None
    format: str = "csv"
    seed: int = verify.DEFAULT_SEED
    suites: list[str] = field(default_factory=list)

    @property
    def sweep_settings(self) -> SweepSettings:
        return SweepSettings(self.delta, self.k, self.theta_max, self.grid_points, self.tol)


def _fmt(v) -> str:
    """Round-trip text for a CSV cell; independent of locale."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_safe(v):
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads() -> int:
    raw = os.environ.get("PGF_CLT_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise InvalidInput(f"PGF_CLT_THREADS must be an integer, got {raw!r}") from None


def _load_input(cfg: RunConfig) -> Pmf:
    if cfg.pmf:
        return load_pmf_json(cfg.pmf)
    if cfg.family is not None:
        n = cfg.n if cfg.n is not None else (cfg.family.sweep[0] if len(cfg.family.sweep) == 1 else None)
        if n is None:
            raise InvalidInput("give --n (or a single --sweep value) to pick one family member")
        return cfg.family.build(n)
    raise InvalidInput("an input is required: --pmf FILE, --m M or --family NAME")


def _relative_gap(a: float, b: float) -> float:
    if abs(b) < NEAR_ZERO:
        return abs(a - b)
    return abs(a - b) / abs(b)


def analyze_report(pmf: Pmf, cfg: RunConfig) -> dict:
    """Everything ``analyze`` reports, as a nested dict."""
    rs = pmf_roots(pmf, cfg.tol)
    work, r, rs_work = diagnostics.auto_tilt(pmf, rs)
    try:
        profile = root_profile(rs_work)
    except RootOnUnitCircle as exc:
        raise RootOnUnitCircle(f"{exc} (tilt r = {r!r} already applied)", exc.suggested_r) from exc
    M = cfg.max_cumulant
    k_roots = cumulants_from_roots(profile, M)
    k_coef = cumulants_from_pmf(work, M)
    gaps = [_relative_gap(k_roots[m], k_coef[m]) for m in range(1, M + 1)]

    z = rs.all_roots()
    roots = {
        "degree": rs.degree,
        "zero_roots": rs.zero_root_count,
        "min_modulus": float(np.abs(z).min()) if z.size else math.nan,
        "max_modulus": float(np.abs(z).max()) if z.size else math.nan,
        "min_dist_to_one": min_dist_to_one(rs) if rs.degree else math.inf,
        "max_residual": float(rs.residuals.max()) if rs.residuals.size else 0.0,
    }
    K = min(POWER_SUM_ORDERS, profile.K)
    power = {"R": profile.R, "K": profile.K}
    for j in range(K):
        power[f"T_{j + 1}"] = float(profile.T[j].real)
        power[f"S_{j + 1}"] = float(profile.S[j].real)
    region = count_near_s(rs, cfg.delta)
    sigma = pmf.sigma
    conditions = [diagnostics.check_large_var(pmf, rs, cfg.eps), diagnostics.check_power_sum(rs, cfg.k)]
    if sigma > 0:
        conditions.append(diagnostics.check_region(rs, sigma, cfg.delta))
    return {
        "distribution": {"n": pmf.n, "mu": pmf.mean, "sigma": sigma},
        "tilt": {"r": r, "applied": r != 1.0},
        "roots": roots,
        "power_sums": power,
        "cumulants": {
            "from_roots": [k_roots[m] for m in range(1, M + 1)],
            "from_coefficients": [k_coef[m] for m in range(1, M + 1)],
            "max_discrepancy": max(gaps),
        },
        "region": {
            "delta": region.delta,
            "N_delta": region.N_delta,
            "in_S": sum(d.in_S for d in region.per_root),
        },
        "conditions": [asdict(c) for c in conditions],
        "normality": {
            "ks_normal": diagnostics.ks_to_normal(pmf) if sigma > 0 else math.nan,
            "cf_dist": diagnostics.cf_distance(pmf, cfg.theta_max, cfg.grid_points) if sigma > 0 else math.nan,
        },
    }


def _flatten(doc: dict) -> list[dict]:
    rows = []
    for section, body in doc.items():
        if section == "cumulants":
            for m, (a, b) in enumerate(zip(body["from_roots"], body["from_coefficients"]), 1):
                rows.append({"section": section, "key": f"kappa_{m}_roots", "value": a})
                rows.append({"section": section, "key": f"kappa_{m}_coefficients", "value": b})
            rows.append({"section": section, "key": "max_discrepancy", "value": body["max_discrepancy"]})
        elif section == "conditions":
            for c in body:
                name = f"condition.{c['condition']}"
                rows.append({"section": name, "key": "holds", "value": c["holds"]})
                for part in ("inputs", "measured"):
                    rows.extend({"section": name, "key": k, "value": v} for k, v in c[part].items())
        else:
            rows.extend({"section": section, "key": k, "value": v} for k, v in body.items())
    return rows


def run_analyze(cfg: RunConfig) -> int:
    doc = analyze_report(_load_input(cfg), cfg)
    text = _json_text(doc) if cfg.format == "json" else _csv_text(REPORT_COLUMNS, _flatten(doc))
    _emit(cfg, text)
    return EXIT_OK


def root_rows(pmf: Pmf, cfg: RunConfig) -> list[dict]:
    rs = pmf_roots(pmf, cfg.tol)
    region = count_near_s(rs, cfg.delta)
    residuals = np.concatenate([rs.residuals, np.zeros(rs.zero_root_count)])
    rows = []
    for d, res in zip(region.per_root, residuals):
        z = d.root
        rows.append(
            {
                "re": z.real,
                "im": z.imag,
                "modulus": abs(z),
                "dist_to_one": abs(1.0 - z),
                "in_S": d.in_S,
                "dist_to_S": d.dist_to_S,
                "m2": d.m2,
                "residual": float(res),
            }
        )
    rows.sort(key=lambda r: (r["modulus"], math.atan2(r["im"], r["re"])))
    return rows


def run_roots(cfg: RunConfig) -> int:
    rows = root_rows(_load_input(cfg), cfg)
    text = _json_text(rows) if cfg.format == "json" else _csv_text(ROOT_COLUMNS, rows)
    _emit(cfg, text)
    return EXIT_OK


def run_family(cfg: RunConfig) -> int:
    if cfg.family is None:
        raise InvalidInput("family needs --family NAME")
    rows = family_sweep(cfg.family, cfg.sweep_settings, on_error="record", workers=_threads())
    text = _json_text(rows) if cfg.format == "json" else _csv_text(SWEEP_COLUMNS, rows)
    _emit(cfg, text)
    return EXIT_OK


def run_verify(cfg: RunConfig) -> int:
    results = verify.run_suites(cfg.seed, cfg.suites or None)
    text = verify.summary_text(results)
    _emit(cfg, text)
    return EXIT_OK if all(r.ok for r in results) else EXIT_PROPERTY


COMMANDS = {"analyze": run_analyze, "family": run_family, "roots": run_roots, "verify": run_verify}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(x)) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pgf-clt", description="Root-based diagnostics for bounded discrete distributions.")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_argument_group("input")
    src.add_argument("--pmf", metavar="FILE", help='JSON file with {"p": [...]} or {"weights": [...]}')
    src.add_argument("--family", metavar="NAME", help=f"one of {', '.join(FAMILY_KINDS)} (hyphens allowed; scaled-poisson)")
    src.add_argument("--inner", metavar="NAME", default="scaled_truncated_poisson", help="inner family for boosted")
    src.add_argument("--p", type=float, default=0.5, help="binomial success probability")
    src.add_argument("--q", type=_float_list, default=(), help="Bernoulli probabilities q1,q2,...")
    src.add_argument("--m", type=int, help="truncated Poisson order (shorthand input)")
    src.add_argument("--C", type=float, default=1.0, help="variance boost constant")
    src.add_argument("--n", type=int, help="family member for analyze/roots")
    src.add_argument("--sweep", type=_int_list, default=(), help="n values n1,n2,...")
    knobs = p.add_argument_group("settings")
    knobs.add_argument("--delta", type=float, default=0.1)
    knobs.add_argument("--eps", type=float, default=0.25)
    knobs.add_argument("--k", type=int, default=2)
    knobs.add_argument("--max-cumulant", type=int, default=6)
    knobs.add_argument("--theta-max", type=float, default=3.0)
    knobs.add_argument("--grid", type=int, default=61)
    knobs.add_argument("--tol", type=float, default=1e-10)
    out = p.add_argument_group("output")
    out.add_argument("--out", metavar="FILE")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
    out.add_argument("--suite", action="append", default=[], choices=sorted(verify.SUITES), help="repeatable")
    return p


def _family_kind(name: str) -> str:
    key = FAMILY_ALIASES.get(name, name).replace("-", "_")
    return FAMILY_ALIASES.get(key, key)


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    family = None
    if ns.family:
        kind = _family_kind(ns.family)
        if ns.pmf and kind != "custom":
            raise InvalidInput("--pmf only combines with --family custom")
        inner = FamilySpec(_family_kind(ns.inner)) if kind == "boosted" else None
        family = FamilySpec(kind, ns.sweep, p=ns.p, q=ns.q, C=ns.C, eps=ns.eps, inner=inner, path=ns.pmf)
    elif ns.m is not None and not ns.pmf:
        family = FamilySpec("truncated_poisson", (ns.m,))
    return RunConfig(
        command=ns.command,
        pmf=ns.pmf if family is None else None,
        family=family,
        n=ns.n,
        delta=ns.delta,
        eps=ns.eps,
        k=ns.k,
        max_cumulant=ns.max_cumulant,
        theta_max=ns.theta_max,
        grid_points=ns.grid,
        tol=ns.tol,
        out=ns.out,
        format=ns.format,
        seed=ns.seed,
        suites=list(ns.suite),
    )


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except RootOnUnitCircle as exc:
        print(f"error: {exc}; suggested tilt r = {exc.suggested_r!r}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvalidInput as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, PgfCltError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
