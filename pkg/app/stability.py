"""
Slope stability for one-point extensions: the recursive semistability
criterion, HN-type enumeration and the numerics of HN strata.

Stability is measured by mu(s,d) = s / (s + |d|). A dimension type is
semistable iff gamma_{T^s,d} = d and no HN type of weight (s,d) has all
pairwise Euler pairings zero; the HN types in turn consist of semistable
steps, so the two questions recurse into each other on strictly smaller s.
"""
import itertools
import logging
from abc import ABC, abstractmethod
from typing import List, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core import euler_form_ext, euler_form_q
from app.crud.memo_repository import MemoRepository
from app.exceptions import GammaOracleError, NotSemistableError, RigidityNotAssertedError, ZeroDimensionError
from app.models import DimVector, ExtDimVector, ExtensionData, HNType

logger = logging.getLogger(__name__)


class GammaWitness(BaseModel):
    """Where a positive gamma answer came from, enough to reproduce it."""
    model_config = ConfigDict(frozen=True)

    source: str = Field(..., description="probe, table or symbolic")
    prime: Optional[int] = Field(None, description="Prime of the probing field")
    seed: Optional[int] = Field(None, description="Seed of the successful probe")


class GammaAnswer(BaseModel):
    model_config = ConfigDict(frozen=True)

    full: bool = Field(..., description="gamma_{T^s,d} = d")
    rank: Optional[DimVector] = Field(None, description="Best vertexwise rank found")
    witness: Optional[GammaWitness] = None


class GammaOracle(ABC):
    """
    Answers "is gamma_{T^s,d} = d?". Answers are memoized per oracle and a
    positive answer always carries a witness.
    """
    def __init__(self):
        self._answers = MemoRepository("gamma")

    @property
    @abstractmethod
    def token(self) -> str:
        """Identity of the answer source, part of every downstream cache key."""

    @abstractmethod
    def _answer(self, ext: ExtensionData, v: ExtDimVector) -> GammaAnswer:
        ...

    def is_full_rank(self, ext: ExtensionData, v: ExtDimVector) -> GammaAnswer:
        answer = self._answers.get_or_compute((ext.fingerprint(), v), lambda: self._answer(ext, v))
        if answer.full and answer.witness is None:
            raise GammaOracleError(f"{self.token} answered gamma = d for {v} without a witness")
        return answer


class TableGammaOracle(GammaOracle):
    """
    Pinned answers for reproducible runs, optionally backed by another oracle
    for dimension types the table does not mention.
    """
    def __init__(self, table: Mapping[ExtDimVector, bool], fallback: Optional[GammaOracle] = None):
        self.table = dict(table)
        self.fallback = fallback
        super().__init__()

    @property
    def token(self) -> str:
        pinned = ";".join(f"{v.cli_form()}={int(b)}" for v, b in sorted(self.table.items(), key=lambda kv: kv[0].flatten()))
        return f"table[{pinned}]" + (f"+{self.fallback.token}" if self.fallback else "")

    def _answer(self, ext: ExtensionData, v: ExtDimVector) -> GammaAnswer:
        if v in self.table:
            full = self.table[v]
            return GammaAnswer(full=full, rank=v.d if full else None,
                               witness=GammaWitness(source="table") if full else None)
        if self.fallback is None:
            raise GammaOracleError(f"no gamma answer pinned for {v.cli_form()}")
        return self.fallback.is_full_rank(ext, v)


_SEMISTABLE = MemoRepository("semistable")
_HN_TYPES = MemoRepository("hn-types")


def clear_caches() -> None:
    _SEMISTABLE.clear()
    _HN_TYPES.clear()


def _require_rigid(ext: ExtensionData) -> None:
    if not ext.is_rigid:
        raise RigidityNotAssertedError()


def gamma_bound_holds(ext: ExtensionData, v: ExtDimVector) -> bool:
    """d <= s*t componentwise, necessary for any surjection T^s -> M."""
    return v.d.le(ext.t.scale(v.s))


def is_semistable_type(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> bool:
    _require_rigid(ext)
    if v.is_zero:
        raise ZeroDimensionError("the dimension type (0,0) is rejected")
    key = (ext.fingerprint(), g.token, v)
    return _SEMISTABLE.get_or_compute(key, lambda: _decide_semistable(ext, v, g))


def _decide_semistable(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> bool:
    if v.s == 0:
        return False
    if not gamma_bound_holds(ext, v):
        logger.debug("%s fails the bound d <= s*t", v)
        return False
    if not v.d.is_zero and not g.is_full_rank(ext, v).full:
        logger.debug("%s fails the gamma condition", v)
        return False
    for hn in enumerate_hn_types(ext, v, g):
        if all(euler_form_ext(ext, a, b) == 0 for a, b in itertools.combinations(hn.steps, 2)):
            logger.debug("%s is destabilized by %s", v, hn)
            return False
    return True


def enumerate_hn_types(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> List[HNType]:
    """
    All HN types of weight v with at least two semistable steps, each with
    s >= 1, in lexicographic order of the flattened steps.
    """
    _require_rigid(ext)
    if v.is_zero:
        raise ZeroDimensionError("the dimension type (0,0) is rejected")
    key = (ext.fingerprint(), g.token, v)
    return list(_HN_TYPES.get_or_compute(key, lambda: tuple(_enumerate_hn_types(ext, v, g))))


def _candidate_steps(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> List[ExtDimVector]:
    steps = []
    for s in range(1, v.s):
        caps = [min(d_i, s * t_i) for d_i, t_i in zip(v.d.dims, ext.t.dims)]
        for dims in itertools.product(*(range(cap + 1) for cap in caps)):
            step = ext.ext_vector(s, dims)
            if is_semistable_type(ext, step, g):
                steps.append(step)
    return steps


def _enumerate_hn_types(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> List[HNType]:
    steps = _candidate_steps(ext, v, g)
    found: List[HNType] = []

    def extend(prefix: List[ExtDimVector], remaining: ExtDimVector) -> None:
        for step in steps:
            if not step.le(remaining):
                continue
            if prefix and step.slope >= prefix[-1].slope:
                continue
            rest = remaining - step
            if rest.is_zero:
                if prefix:
                    found.append(HNType(steps=tuple(prefix + [step])))
            elif rest.s > 0:
                extend(prefix + [step], rest)

    extend([], v)
    found.sort(key=lambda hn: hn.flatten())
    logger.debug("H%s has %d types", v, len(found))
    return found


def hn_stratum_codim(ext: ExtensionData, hn: HNType) -> int:
    """-sum_{k<l} <step_k, step_l>."""
    return -sum(euler_form_ext(ext, a, b) for a, b in itertools.combinations(hn.steps, 2))


def hn_exponent(ext: ExtensionData, hn: HNType) -> int:
    """sum_{n<l} [sum_{a:i->j} d^l_i d^n_j + s^l <t, d^n>_Q]."""
    total = 0
    for n, l in itertools.combinations(range(hn.length), 2):
        earlier, later = hn.steps[n], hn.steps[l]
        total += sum(later.d[a.source] * earlier.d[a.target] for a in ext.quiver.arrows)
        total += later.s * euler_form_q(ext.quiver, ext.t, earlier.d)
    return total


def stable_equals_semistable(ext: ExtensionData, v: ExtDimVector, g: GammaOracle) -> bool:
    """
    False iff v splits into two semistable types of equal slope, which gives
    a properly semistable direct sum.
    """
    if not is_semistable_type(ext, v, g):
        raise NotSemistableError(f"{v} is not a semistable dimension type")
    for s in range(1, v.s):
        for dims in itertools.product(*(range(d_i + 1) for d_i in v.d.dims)):
            w = ext.ext_vector(s, dims)
            if s * v.total != v.s * w.total:
                continue
            if is_semistable_type(ext, w, g) and is_semistable_type(ext, v - w, g):
                logger.info("%s = %s + %s with equal slopes", v, w, v - w)
                return False
    return True
