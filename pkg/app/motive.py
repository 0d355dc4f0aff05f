"""
Motives of Rep^full, the motivic HN recursion and Poincare polynomials.

[Rep^sst_v]/[G_v] = [Rep^full_v]/[G_v]
                    - sum_{hn in H(v)} L^{exp(hn)} prod_k [Rep^sst_{hn_k}] / [P_hn]

The classes of Rep^full come from a RepFullMotiveSource: the symbolic
engine for one-arrow quivers, Lagrange interpolation of exact point counts,
or a table supplied by the user.
"""
import hashlib
import logging
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import sympy
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from app.core import expected_dims
from app.crud.memo_repository import MemoRepository
from app.exceptions import (ExplicitModuleRequiredError, HypothesisViolationError, InterpolationError,
                            InvariantCheckFailed, MotiveArithmeticError, NonPolynomialResultError,
                            NotSemistableError, UnsupportedEngineError)
from app.grothendieck import (L, LPolynomial, MotiveExpr, class_group, class_parabolic, class_pg,
                              count_matrices_of_rank, gaussian_binomial)
from app.models import ExtDimVector, ExtensionData, HNType
from app.oracle.census import count_rep_full_points
from app.stability import (GammaAnswer, GammaOracle, GammaWitness, enumerate_hn_types, hn_exponent,
                           is_semistable_type, stable_equals_semistable)

logger = logging.getLogger(__name__)


class SymbolicA2Source(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["symbolic_a2"] = "symbolic_a2"

    @property
    def token(self) -> str:
        return self.kind


class InterpolatedSource(BaseModel):
    """
    Interpolates exact point counts over F_p. Unset fields are chosen per
    dimension type: the degree bound is dim Rep^full, the sample primes are
    the smallest degree_bound + 1 primes and the next prime confirms.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["interpolated"] = "interpolated"
    primes: Optional[Tuple[int, ...]] = Field(None, description="Sample primes")
    degree_bound: Optional[int] = Field(None, ge=0)
    confirmation_prime: Optional[int] = Field(None, description="Held-out prime checked against the result")
    budget: int = Field(10**8, ge=1, description="Enumeration budget per count")

    @model_validator(mode="after")
    def _check_primes(self) -> "InterpolatedSource":
        for p in (self.primes or ()) + ((self.confirmation_prime,) if self.confirmation_prime else ()):
            if not sympy.isprime(p):
                raise ValueError(f"{p} is not a prime")
        if self.primes is not None and self.degree_bound is not None and len(self.primes) < self.degree_bound + 1:
            raise ValueError(f"{len(self.primes)} primes cannot determine a polynomial of degree {self.degree_bound}")
        if self.primes and self.confirmation_prime in self.primes:
            raise ValueError("the confirmation prime must be held out of the samples")
        return self

    @property
    def token(self) -> str:
        return f"interpolated[{self.primes},{self.degree_bound},{self.confirmation_prime}]"


class UserTableSource(BaseModel):
    """Classes of Rep^full keyed by the CLI form "s:d1,d2,..."."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["user_table"] = "user_table"
    table: Dict[str, str]

    @model_validator(mode="after")
    def _check_entries(self) -> "UserTableSource":
        for key, text in self.table.items():
            try:
                MotiveExpr.parse(text)
            except MotiveArithmeticError as e:
                raise ValueError(f"entry {key}: {e.detail}")
        return self

    @property
    def token(self) -> str:
        digest = hashlib.sha256(repr(sorted(self.table.items())).encode()).hexdigest()[:16]
        return f"user_table[{digest}]"


RepFullMotiveSource = Annotated[Union[SymbolicA2Source, InterpolatedSource, UserTableSource],
                                Field(discriminator="kind")]
source_adapter = TypeAdapter(RepFullMotiveSource)


class A2IsoClass(BaseModel):
    """M = P_1^r + S_1^{d1-r} + S_2^{d2-r} over the quiver 1 -> 2."""
    model_config = ConfigDict(frozen=True)

    d1: int = Field(..., ge=0)
    d2: int = Field(..., ge=0)
    r: int = Field(..., ge=0, description="Rank of the arrow map")

    @model_validator(mode="after")
    def _check_rank(self) -> "A2IsoClass":
        if self.r > min(self.d1, self.d2):
            raise ValueError(f"rank {self.r} exceeds min({self.d1}, {self.d2})")
        return self


class A2MotiveEngine:
    """
    Symbolic classes for a single arrow i -> j. T is determined up to
    isomorphism by p = rank T_a, u = t_i - p and v = t_j - p.
    """
    def __init__(self, ext: ExtensionData):
        q = ext.quiver
        if len(q.arrows) != 1 or len(q.vertices) != 2 or q.arrows[0].source == q.arrows[0].target:
            raise UnsupportedEngineError("the symbolic engine needs the quiver 1 -> 2; "
                                         "supply a user table or interpolate")
        if ext.t_matrices is None:
            raise ExplicitModuleRequiredError()
        arrow = q.arrows[0]
        self.arrow = arrow
        t1, t2 = ext.t[arrow.source], ext.t[arrow.target]
        matrix = ext.matrix(arrow.name)
        self.p = sympy.Matrix(t2, t1, [x for row in matrix for x in row]).rank()
        self.u = t1 - self.p
        self.v = t2 - self.p
        self._epi = MemoRepository("a2-epi")
        self._rep_full = MemoRepository("a2-rep-full")

    def iso_classes(self, d1: int, d2: int) -> List[A2IsoClass]:
        return [A2IsoClass(d1=d1, d2=d2, r=r) for r in range(min(d1, d2) + 1)]

    def hom_dim(self, s: int, c: A2IsoClass) -> int:
        """dim Hom(T^s, M) from Hom(P_1, N) = N_1, Hom(S_1, N) = ker N_a and Hom(S_2, N) = N_2."""
        return s * (self.p * c.d1 + self.u * (c.d1 - c.r) + self.v * c.d2)

    def orbit_class(self, c: A2IsoClass) -> LPolynomial:
        return count_matrices_of_rank(c.d2, c.d1, c.r)

    def submodule_multiplicity(self, m: A2IsoClass, c: A2IsoClass) -> LPolynomial:
        """Number of submodules of M isomorphic to c."""
        a, b, rho = m.d1, m.d2, m.r
        i, j, r = c.d1, c.d2, c.r
        if i - r > a - rho or r > rho:
            return LPolynomial(0)
        return (gaussian_binomial(rho, r) * gaussian_binomial(a - rho, i - r)
                * LPolynomial.power(r * (a - rho - i + r)) * gaussian_binomial(b - r, j - r))

    def hom_epi_class(self, s: int, m: A2IsoClass) -> LPolynomial:
        """#Epi(T^s, M) = L^{hom(T^s, M)} - sum over proper submodule classes c of sigma_M(c) #Epi(T^s, c)."""
        return self._epi.get_or_compute((s, m), lambda: self._hom_epi_class(s, m))

    def _hom_epi_class(self, s: int, m: A2IsoClass) -> LPolynomial:
        value = LPolynomial.power(self.hom_dim(s, m))
        for i in range(m.d1 + 1):
            for j in range(m.d2 + 1):
                for r in range(min(i, j, m.r) + 1):
                    c = A2IsoClass(d1=i, d2=j, r=r)
                    if c == m:
                        continue
                    sigma = self.submodule_multiplicity(m, c)
                    if not sigma.is_zero:
                        value = value - sigma * self.hom_epi_class(s, c)
        return value

    def rep_full(self, v: ExtDimVector) -> LPolynomial:
        return self._rep_full.get_or_compute(v, lambda: self._compute_rep_full(v))

    def _compute_rep_full(self, v: ExtDimVector) -> LPolynomial:
        d1, d2 = v.d[self.arrow.source], v.d[self.arrow.target]
        total = LPolynomial(0)
        for c in self.iso_classes(d1, d2):
            epi = self.hom_epi_class(v.s, c)
            if not epi.is_zero:
                total = total + self.orbit_class(c) * epi
        logger.debug("[Rep^full %s] = %s", v, total)
        return total


_ENGINES = MemoRepository("a2-engines")


def a2_engine(ext: ExtensionData) -> A2MotiveEngine:
    return _ENGINES.get_or_compute(ext.fingerprint(), lambda: A2MotiveEngine(ext))


class A2GammaOracle(GammaOracle):
    """Exact gamma test for one-arrow quivers: gamma = d iff [Rep^full] != 0."""

    @property
    def token(self) -> str:
        return "symbolic-a2"

    def _answer(self, ext: ExtensionData, v: ExtDimVector) -> GammaAnswer:
        full = not a2_engine(ext).rep_full(v).is_zero
        return GammaAnswer(full=full, rank=v.d if full else None,
                           witness=GammaWitness(source="symbolic") if full else None)


def _check_degree(v: ExtDimVector, value: MotiveExpr, ext: ExtensionData) -> None:
    if value.is_zero:
        return
    expected = expected_dims(ext, v).dim_rep_full
    if value.degree != expected:
        raise InvariantCheckFailed(f"[Rep^full {v}] has degree {value.degree}, expected {expected}")


def motive_rep_full(ext: ExtensionData, v: ExtDimVector, src) -> MotiveExpr:
    """[Rep^full_(s,d)(A[T])] from the given source."""
    if isinstance(src, SymbolicA2Source):
        value = MotiveExpr(a2_engine(ext).rep_full(v))
    elif isinstance(src, UserTableSource):
        key = v.cli_form()
        if key not in src.table:
            raise UnsupportedEngineError(f"the user table has no entry for {key}")
        value = MotiveExpr.parse(src.table[key])
    elif isinstance(src, InterpolatedSource):
        value = MotiveExpr(interpolate_rep_full(ext, v, src))
    else:
        raise UnsupportedEngineError(f"unknown motive source {src!r}")
    _check_degree(v, value, ext)
    return value


def interpolate_rep_full(ext: ExtensionData, v: ExtDimVector, src: InterpolatedSource) -> LPolynomial:
    """Lagrange interpolation of |Rep^full(F_p)|, confirmed at a held-out prime."""
    bound = src.degree_bound if src.degree_bound is not None else max(expected_dims(ext, v).dim_rep_full, 0)
    primes = src.primes or tuple(sympy.prime(k) for k in range(1, bound + 2))
    if len(primes) < bound + 1:
        raise InterpolationError(f"{len(primes)} primes cannot determine a polynomial of degree {bound}")
    confirmation = src.confirmation_prime or sympy.nextprime(max(primes))
    samples = [(p, count_rep_full_points(ext, v, p, src.budget)) for p in primes]
    try:
        poly = LPolynomial(sympy.Poly(sympy.interpolate(samples, L), L))
    except MotiveArithmeticError:
        raise InterpolationError(f"counts of {v} at {list(primes)} do not fit an integer polynomial")
    if poly.degree > bound:
        raise InterpolationError(f"interpolated degree {poly.degree} exceeds the bound {bound}")
    observed = count_rep_full_points(ext, v, confirmation, src.budget)
    if poly.eval(confirmation) != observed:
        raise InterpolationError(f"{poly} predicts {poly.eval(confirmation)} points over F_{confirmation}, "
                                 f"counted {observed}")
    logger.info("[Rep^full %s] = %s by interpolation at %s", v, poly, list(primes))
    return poly


_SST = MemoRepository("motive-sst")


def clear_caches() -> None:
    _SST.clear()
    _ENGINES.clear()


def motive_sst(ext: ExtensionData, v: ExtDimVector, src, g: GammaOracle) -> MotiveExpr:
    """[Rep^sst_v]; the zero motive when v is not a semistable type."""
    key = (ext.fingerprint(), src.token, g.token, v)
    return _SST.get_or_compute(key, lambda: _compute_sst(ext, v, src, g))


def _compute_sst(ext: ExtensionData, v: ExtDimVector, src, g: GammaOracle) -> MotiveExpr:
    if not is_semistable_type(ext, v, g):
        logger.warning("%s is not a semistable type; using the zero motive", v)
        return MotiveExpr(0)
    group = class_group(v)
    value = motive_rep_full(ext, v, src) / group
    for hn in enumerate_hn_types(ext, v, g):
        value = value - hn_s_term(ext, hn, src, g)
    return value * group


def hn_s_term(ext: ExtensionData, hn: HNType, src, g: GammaOracle) -> MotiveExpr:
    """L^{exp(hn)} prod_k [Rep^sst_{hn_k}] / [P_hn], the HN term of the recursion."""
    value = MotiveExpr.lefschetz(hn_exponent(ext, hn))
    for step in hn.steps:
        value = value * motive_sst(ext, step, src, g)
    return value / class_parabolic(hn)


def hn_stratum_class(ext: ExtensionData, hn: HNType, src, g: GammaOracle) -> MotiveExpr:
    """Class of the HN stratum of type hn inside Rep^full: [G]/[P] L^exp prod [Rep^sst]."""
    return class_group(hn.weight) * hn_s_term(ext, hn, src, g)


def poincare_term(ext: ExtensionData, hn: HNType, src, g: GammaOracle) -> MotiveExpr:
    """A stratum class divided by [PG], i.e. (L - 1) times hn_s_term."""
    return hn_stratum_class(ext, hn, src, g) / class_pg(hn.weight)


def poincare_polynomial(ext: ExtensionData, v: ExtDimVector, src, g: GammaOracle) -> LPolynomial:
    """
    sum_i dim H^i(M^st_v) L^{i/2} = [Rep^sst_v]/[PG_v], valid when stability
    and semistability coincide for v.
    """
    if not is_semistable_type(ext, v, g):
        raise NotSemistableError(f"{v} is not a semistable dimension type")
    if not stable_equals_semistable(ext, v, g):
        raise HypothesisViolationError(f"semistability and stability differ for {v}")
    result = motive_sst(ext, v, src, g) / class_pg(v)
    if not result.is_polynomial:
        raise NonPolynomialResultError(f"[Rep^sst {v}]/[PG] = {result} is not a polynomial")
    poly = result.to_lpolynomial()
    expected = expected_dims(ext, v).dim_moduli
    if poly.degree != expected or poly.eval(0) != 1 or any(c < 0 for c in poly.coefficients.values()):
        raise InvariantCheckFailed(f"Poincare polynomial {poly} of {v} is not a Betti series of dimension {expected}")
    return poly
