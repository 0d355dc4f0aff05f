"""
The invariant suite behind `qmod check`.

Every check returns a CheckResult; a check that does not apply to the
loaded config (no symbolic engine, no built-in semi-invariants) is reported
as skipped rather than failed. Exhaustive enumerations only run when the
census part of the suite is requested.
"""
import itertools
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core import build_extended_quiver, euler_form_ext, euler_form_q, expected_dims
from app.exceptions import (BudgetExceededError, DegenerateQuotientError, ExplicitModuleRequiredError, QmodError,
                            UnsupportedEngineError)
from app.grothendieck import class_group, class_parabolic
from app.models import ExtDimVector, ExtensionData
from app.motive import hn_stratum_class, motive_rep_full, motive_sst, poincare_polynomial
from app.oracle.census import count_rep_full_points, semistable_point_exists
from app.oracle.probes import (euler_identity_check, ext2_dim, hom_formula_check, jacobian_check,
                               rigidity_check, sample_points)
from app.schemas import CheckResponse, CheckResult
from app.semiinv import builtin_semi_invariants, orbit_points, quotient_coords, quotient_image_count, verify_weight
from app.services import ModuliService
from app.stability import enumerate_hn_types, is_semistable_type, stable_equals_semistable

logger = logging.getLogger(__name__)

Outcome = Tuple[bool, str]

BUILTIN_TYPES = ((2, (4, 1)), (3, (6, 2)))


def dimension_types(ext: ExtensionData, max_s: int = 2, max_total: int = 5) -> List[ExtDimVector]:
    """Every (s, d) with 1 <= s <= max_s, d <= s*t and |d| <= max_total, in lexicographic order."""
    types = []
    for s in range(1, max_s + 1):
        caps = [min(s * t, max_total) for t in ext.t.dims]
        for dims in itertools.product(*(range(cap + 1) for cap in caps)):
            if sum(dims) <= max_total:
                types.append(ext.ext_vector(s, dims))
    return types


def semistable_types(service: ModuliService, types: Sequence[ExtDimVector]) -> List[ExtDimVector]:
    return [v for v in types if is_semistable_type(service.ext, v, service.gamma)]


# --- Core ---

def check_euler_form(service: ModuliService) -> Outcome:
    ext = service.ext
    rng = np.random.default_rng(service.seed)
    n = len(ext.quiver.vertices)

    def draw() -> ExtDimVector:
        return ext.ext_vector(int(rng.integers(0, 4)), [int(x) for x in rng.integers(0, 5, size=n)])

    for _ in range(25):
        a, b, c = draw(), draw(), draw()
        if euler_form_ext(ext, a + b, c) != euler_form_ext(ext, a, c) + euler_form_ext(ext, b, c):
            return False, f"not additive in the first argument at {a}, {b}, {c}"
        if euler_form_ext(ext, c, a + b) != euler_form_ext(ext, c, a) + euler_form_ext(ext, c, b):
            return False, f"not additive in the second argument at {a}, {b}, {c}"
        restricted = euler_form_ext(ext, ext.ext_vector(0, a.d.dims), ext.ext_vector(0, b.d.dims))
        if restricted != euler_form_q(ext.quiver, a.d, b.d):
            return False, f"restriction to s = 0 differs from the form of Q at {a.d}, {b.d}"
    return True, "25 random triples"


def check_slopes(service: ModuliService) -> Outcome:
    ext = service.ext
    types = dimension_types(ext) + [ext.ext_vector(0, v.d.dims) for v in dimension_types(ext, 1) if not v.d.is_zero]
    for v in types:
        mu = v.slope
        if not 0 <= mu <= 1 or (mu == 1) != v.d.is_zero or (mu == 0) != (v.s == 0):
            return False, f"slope {mu} of {v} is out of range"
    return True, f"{len(types)} dimension types"


def check_extended_quiver(service: ModuliService) -> Outcome:
    ext = service.ext
    eq = build_extended_quiver(ext)
    expected = sum(ext.t[arrow.source] for arrow in ext.quiver.arrows)
    if len(eq.relations) != expected:
        return False, f"{len(eq.relations)} relations, expected {expected}"
    for vertex in ext.quiver.vertices:
        if len(eq.rho_arrows[vertex]) != ext.t[vertex]:
            return False, f"{len(eq.rho_arrows[vertex])} arrows inf -> {vertex}, expected {ext.t[vertex]}"
    return True, f"{expected} relations"


def check_rigidity(service: ModuliService) -> Outcome:
    rigid = rigidity_check(service.ext, service.settings.PROBE_PRIME)
    if not rigid and service.ext.assume_rigid:
        return False, "T is asserted rigid but Ext(T,T) != 0"
    return rigid, "Ext(T,T) = 0" if rigid else "Ext(T,T) != 0"


# --- Motives ---

def check_motives(service: ModuliService) -> Outcome:
    """
    For every semistable type up to s = 2, |d| = 5: the strata add up to
    Rep^full, flag varieties have nonnegative classes, and the Poincare
    polynomial passes its own checks where it is defined.
    """
    ext, g, src = service.ext, service.gamma, service.source()
    types = semistable_types(service, dimension_types(ext))
    polynomials = 0
    for v in types:
        strata = motive_sst(ext, v, src, g)
        for hn in enumerate_hn_types(ext, v, g):
            strata = strata + hn_stratum_class(ext, hn, src, g)
            flag = class_group(hn.weight) / class_parabolic(hn)
            if not flag.is_polynomial or any(c < 0 for c in flag.numerator.coefficients.values()):
                return False, f"flag class {flag} of {hn} is not a polynomial with nonnegative coefficients"
        if strata != motive_rep_full(ext, v, src):
            return False, f"the HN strata of {v} do not add up to [Rep^full]"
        if stable_equals_semistable(ext, v, g):
            poincare_polynomial(ext, v, src, g)
            polynomials += 1
    return True, f"{len(types)} semistable types, {polynomials} Poincare polynomials"


# --- Homological probes ---

def check_points(service: ModuliService, per_type: int = 10) -> Outcome:
    """Relations, tangent spaces, Ext^2 vanishing and the Euler identity on sampled full points."""
    ext, p = service.ext, service.settings.PROBE_PRIME
    points = []
    for k, v in enumerate(semistable_types(service, dimension_types(ext))):
        points.extend(sample_points(ext, v, p, per_type, service.seed + k))
    if not points:
        return True, "no full points sampled"
    for point in points:
        if not point.relations_vanish(ext):
            return False, f"a sampled point of {point.dim} violates the relations"
        if not jacobian_check(ext, point):
            return False, f"tangent dimension mismatch at a point of {point.dim}"
    for m, n in zip(points, points[1:] + points[:1]):
        if ext2_dim(ext, m, n) != 0:
            return False, f"Ext^2 between points of {m.dim} and {n.dim} is nonzero"
        report = euler_identity_check(ext, m, n)
        if not report.passed:
            return False, f"Euler identity gives ext1 = {report.ext1} for {m.dim}, {n.dim}"
    return True, f"{len(points)} points"


def check_hom_formula(service: ModuliService, max_total: int = 6) -> Outcome:
    ext, settings = service.ext, service.settings
    n = len(ext.quiver.vertices)
    checked = 0
    for dims in itertools.product(range(max_total + 1), repeat=n):
        if not 0 < sum(dims) <= max_total:
            continue
        v = ext.ext_vector(1, dims)
        report = hom_formula_check(ext, v, settings.PROBE_PRIME, settings.PROBE_TRIALS, service.seed)
        if not report.passed:
            return False, f"hom formula fails for d = {v.d}"
        checked += 1
    return True, f"{checked} dimension vectors"


# --- Semi-invariants ---

def _builtin_types(ext: ExtensionData) -> List[ExtDimVector]:
    return [ext.ext_vector(s, dims) for s, dims in BUILTIN_TYPES]


def check_semi_invariants(service: ModuliService, trials: int = 100, orbit_samples: int = 20) -> Outcome:
    ext, p = service.ext, service.settings.PROBE_PRIME
    fitted = orbits = 0
    for v in _builtin_types(ext):
        for _, si in sorted(builtin_semi_invariants(ext, v).items()):
            verify_weight(ext, si, p, trials, service.seed)
            fitted += 1
        for x, gx in orbit_points(ext, v, p, orbit_samples, service.seed):
            if not x.is_full:
                continue
            try:
                here = quotient_coords(ext, x)
            except DegenerateQuotientError:
                continue
            if quotient_coords(ext, gx) != here:
                return False, f"quotient coordinates of {v} change along an orbit"
            orbits += 1
    return True, f"{fitted} weights fitted, {orbits} orbits compared"


# --- Exhaustive census ---

def _over_budget(v: ExtDimVector, e: BudgetExceededError) -> None:
    logger.info("skipping %s: %s", v, e.detail)


def check_point_counts(service: ModuliService) -> Outcome:
    """[Rep^full] at L = p against exhaustive counts for every prime in CENSUS_PRIMES."""
    ext, src = service.ext, service.source()
    compared = 0
    for v in dimension_types(ext):
        for p in service.settings.CENSUS_PRIMES:
            try:
                counted = count_rep_full_points(ext, v, p, service.budget)
            except BudgetExceededError as e:
                _over_budget(v, e)
                continue
            predicted = motive_rep_full(ext, v, src).eval_at(p)
            if predicted != counted:
                return False, f"{v} over F_{p}: counted {counted}, predicted {predicted}"
            compared += 1
    return True, f"{compared} counts"


def check_king_agreement(service: ModuliService) -> Outcome:
    """The recursive criterion against King semistable points found by enumeration."""
    ext, g = service.ext, service.gamma
    primes = tuple(service.settings.CENSUS_PRIMES)
    disagreements, compared = [], 0
    for v in dimension_types(ext):
        try:
            search = semistable_point_exists(ext, v, primes, service.seed, service.budget)
        except BudgetExceededError as e:
            _over_budget(v, e)
            continue
        compared += 1
        if search.found != is_semistable_type(ext, v, g):
            disagreements.append(f"{v.cli_form()} (F_{search.prime})")
    if disagreements:
        return False, "criterion and King check disagree for " + ", ".join(disagreements)
    return True, f"{compared} dimension types"


def check_census(service: ModuliService, dims: Sequence[str]) -> Outcome:
    ext, p = service.ext, min(service.settings.CENSUS_PRIMES)
    done = 0
    for dim in dims:
        try:
            response = service.census(dim, p)
        except BudgetExceededError as e:
            _over_budget(service.parse_dim(dim), e)
            continue
        if not response.passed:
            return False, f"stratum census of {dim} over F_{p} does not match"
        done += 1
    for v in _builtin_types(ext):
        dimension = expected_dims(ext, v).dim_moduli
        try:
            report = quotient_image_count(ext, v, p, service.budget)
        except BudgetExceededError as e:
            _over_budget(v, e)
            continue
        points = (p ** (dimension + 1) - 1) // (p - 1)
        if report.degenerate or report.images != points:
            return False, f"stable points of {v} hit {report.images} of {points} points of P^{dimension}(F_{p})"
        done += 1
    return True, f"{done} censuses"


# --- Suite ---

def _run(name: str, check: Callable[[], Outcome]) -> CheckResult:
    try:
        passed, detail = check()
    except BudgetExceededError:
        raise
    except (UnsupportedEngineError, ExplicitModuleRequiredError) as e:
        return CheckResult(name=name, passed=True, skipped=True, detail=e.detail)
    except QmodError as e:
        passed, detail = False, f"{type(e).__name__}: {e.detail}"
    if not passed:
        logger.warning("check %s failed: %s", name, detail)
    return CheckResult(name=name, passed=passed, detail=detail)


def run_checks(service: ModuliService, census: bool = False, dims: Optional[Sequence[str]] = None) -> CheckResponse:
    """Runs the suite in a fixed order; `census` adds the exhaustive enumerations."""
    checks: List[Tuple[str, Callable[[], Outcome]]] = [
        ("euler-form", lambda: check_euler_form(service)),
        ("slopes", lambda: check_slopes(service)),
        ("extended-quiver", lambda: check_extended_quiver(service)),
        ("rigidity", lambda: check_rigidity(service)),
        ("motives", lambda: check_motives(service)),
        ("points", lambda: check_points(service)),
        ("hom-formula", lambda: check_hom_formula(service)),
        ("semi-invariants", lambda: check_semi_invariants(service)),
    ]
    if census:
        census_dims = list(dims) if dims else [v.cli_form() for v in _builtin_types(service.ext)[:1]]
        checks += [
            ("point-counts", lambda: check_point_counts(service)),
            ("king-agreement", lambda: check_king_agreement(service)),
            ("census", lambda: check_census(service, census_dims)),
        ]
    results = [_run(name, check) for name, check in checks]
    logger.info("%d of %d checks passed", sum(r.passed for r in results), len(results))
    return CheckResponse(results=results)
