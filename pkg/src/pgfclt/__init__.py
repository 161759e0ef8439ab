"""Bounded discrete random variables analyzed through the roots of their PGFs."""

from .errors import *  # noqa: F401,F403
from .poly_core import (
    CumulantSource,
    CumulantVector,
    PgfFactor,
    Pmf,
    Polynomial,
    convolve,
    cumulants_from_pmf,
    load_pmf_json,
    mean_var,
    pmf_from_weights,
    point_mass,
    tilt,
)
from .root_engine import (
    RootProfile,
    RootSet,
    exp_section_roots,
    find_roots,
    min_dist_to_one,
    newton_power_sums,
    pmf_roots,
    root_profile,
)
from .cumulants import (
    ExpFormTerms,
    ab_coefficients,
    ck_coefficients,
    cumulant_tail_bound,
    cumulants_from_roots,
    exp_form_eval,
    exp_form_terms,
    stirling2,
)
from .region import (
    QuadFactor,
    RegionReport,
    central_moment_mk,
    count_near_s,
    dist_to_region_s,
    in_region_s,
    m2_sign,
    m2_value,
    moment_bound_probe,
    quad_factor,
)
from .families import (
    FamilySpec,
    SweepSettings,
    bernoulli_product,
    binomial,
    epsilon_scaled_family,
    family_sweep,
    scaled_truncated_poisson,
    truncated_poisson,
    variance_boost,
)
from .diagnostics import (
    ConditionReport,
    StandardizedDist,
    auto_tilt,
    cf_distance,
    check_large_var,
    check_power_sum,
    check_region,
    ks_to_normal,
    standardize,
    standardized_moment,
    szego_annulus_check,
)

__version__ = "0.1.0"
