"""
Exhaustive enumeration of Rep^full over F_p and the slope stability of
individual points.

The stability of a point (M, V, f) only depends on its rank profile: for
every subspace W of V the vertexwise dimensions of the generated
subobject, r_i(W) = rank f_i (id_{T_i} (x) W). Censuses therefore compute
profiles for whole batches of points at once and classify each distinct
profile a single time.
"""
import logging
from collections import Counter
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.exceptions import BudgetExceededError, ZeroDimensionError
from app.grothendieck import gaussian_binomial
from app.models import ExtDimVector, ExtensionData, HNType
from app.oracle.field import PrimeField, enumerate_subspaces
from app.oracle.representations import FqRep, HomSpace, QRep, hom_space, prime_field, random_point, tensor_rep

logger = logging.getLogger(__name__)

BATCH_SIZE = 1 << 15


class KingVerdict(str, Enum):
    STABLE = "stable"
    SEMISTABLE_NOT_STABLE = "semistable_not_stable"
    UNSTABLE = "unstable"

    @property
    def is_semistable(self) -> bool:
        return self is not KingVerdict.UNSTABLE


class SubspaceLattice:
    """
    All subspaces of F_p^s: index 0 is the zero subspace and the last index
    is V itself. `contains[a, b]` is true iff subspace a lies inside b.
    """
    def __init__(self, p: int, s: int):
        self.p = p
        self.s = s
        field = prime_field(p)
        self.bases: List[np.ndarray] = list(enumerate_subspaces(field, s))
        self.dims = np.array([basis.shape[1] for basis in self.bases], dtype=np.int64)
        count = len(self.bases)
        self.contains = np.zeros((count, count), dtype=bool)
        for b, outer in enumerate(self.bases):
            for a, inner in enumerate(self.bases):
                if self.dims[a] <= self.dims[b]:
                    self.contains[a, b] = field.rank(np.hstack([outer, inner])) == self.dims[b]
        self.top = count - 1

    def __len__(self):
        return len(self.bases)

    @property
    def proper(self) -> range:
        """Indices of the subspaces strictly between 0 and V."""
        return range(1, self.top)


def lattice_size(p: int, s: int) -> int:
    return sum(gaussian_binomial(s, k).eval(p) for k in range(s + 1))


@lru_cache(maxsize=32)
def _cached_lattice(p: int, s: int) -> SubspaceLattice:
    return SubspaceLattice(p, s)


def subspace_lattice(p: int, s: int, budget: int) -> SubspaceLattice:
    size = lattice_size(p, s)
    if size > budget:
        raise BudgetExceededError(f"{size} subspaces of F_{p}^{s} exceed the budget {budget}")
    return _cached_lattice(p, s)


def batched_profiles(ext: ExtensionData, f: Dict[str, np.ndarray], lattice: SubspaceLattice,
                     indices) -> np.ndarray:
    """
    Ranks r_i(W) for a stack of structure maps, shape (N, len(indices), n_vertices).
    """
    field = prime_field(lattice.p)
    vertices = ext.quiver.vertices
    count = next(iter(f.values())).shape[0] if f else 0
    profile = np.zeros((count, len(indices), len(vertices)), dtype=np.int64)
    for column, index in enumerate(indices):
        basis = lattice.bases[index]
        for position, vertex in enumerate(vertices):
            if f[vertex].shape[1] == 0 or f[vertex].shape[2] == 0:
                continue
            spread = np.kron(np.eye(ext.t[vertex], dtype=np.int64), basis)
            profile[:, column, position] = field.batched_rank(field.matmul(f[vertex], spread))
    return profile


def point_profile(ext: ExtensionData, rep: FqRep, lattice: SubspaceLattice) -> np.ndarray:
    """Ranks for every subspace of the lattice, shape (len(lattice), n_vertices)."""
    stacked = {v: rep.f[v][None, :, :] for v in ext.quiver.vertices}
    return batched_profiles(ext, stacked, lattice, range(len(lattice)))[0]


def _slope(ds: int, dd: int) -> Fraction:
    return Fraction(ds, ds + dd) if ds + dd else Fraction(0)


def king_from_profile(v: ExtDimVector, lattice: SubspaceLattice, ranks: np.ndarray) -> KingVerdict:
    """
    Semistable iff every subobject (W, generated) other than 0 and the whole
    representation has slope <= mu(v); stable when the inequality is strict.
    Subobjects with W = 0 have slope 0 and never destabilize.
    """
    mu = v.slope
    whole = tuple(v.d.dims)
    verdict = KingVerdict.STABLE
    for index in range(1, len(lattice)):
        generated = tuple(int(x) for x in ranks[index])
        if index == lattice.top and generated == whole:
            continue
        sub = _slope(int(lattice.dims[index]), sum(generated))
        if sub > mu:
            return KingVerdict.UNSTABLE
        if sub == mu:
            verdict = KingVerdict.SEMISTABLE_NOT_STABLE
    return verdict


class HNFiltration(BaseModel):
    """The HN type of a point and the chain of subspaces of V realizing it."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    hn_type: HNType
    subspaces: Tuple[np.ndarray, ...] = Field(..., description="Bases of W_1 < W_2 < ... of V")
    generated: Tuple[Tuple[int, ...], ...] = Field(..., description="Dimension vectors of the generated subobjects")


def hn_chain_from_profile(ext: ExtensionData, v: ExtDimVector, lattice: SubspaceLattice,
                          ranks: np.ndarray) -> Tuple[HNType, List[int]]:
    """
    Walks up the lattice taking, relative to the current W, the superspace of
    maximal slope and among those the largest one. This is the maximal
    destabilizing subobject of the quotient: for a fixed W-part the
    generated subobject minimizes the total dimension. A non-surjective f
    contributes a final slope-0 step (0, d - im f).
    """
    current, chain, steps = 0, [], []
    while current != lattice.top:
        best, best_key = None, None
        for index in np.nonzero(lattice.contains[current])[0]:
            if index == current:
                continue
            ds = int(lattice.dims[index] - lattice.dims[current])
            dd = [int(a - b) for a, b in zip(ranks[index], ranks[current])]
            key = (_slope(ds, sum(dd)), ds)
            if best_key is None or key > best_key:
                best, best_key = int(index), key
        dd = [int(a - b) for a, b in zip(ranks[best], ranks[current])]
        steps.append(ext.ext_vector(int(lattice.dims[best] - lattice.dims[current]), dd))
        chain.append(best)
        current = best
    rest = [d_i - int(r) for d_i, r in zip(v.d.dims, ranks[lattice.top])]
    if any(rest):
        steps.append(ext.ext_vector(0, rest))
    if not steps:
        steps.append(v)
    return HNType(steps=tuple(steps)), chain


def king_check(ext: ExtensionData, rep: FqRep, budget: int = 10**8) -> KingVerdict:
    lattice = subspace_lattice(rep.p, rep.s, budget)
    return king_from_profile(rep.dim, lattice, point_profile(ext, rep, lattice))


def hn_filtration_point(ext: ExtensionData, rep: FqRep, budget: int = 10**8) -> HNFiltration:
    lattice = subspace_lattice(rep.p, rep.s, budget)
    ranks = point_profile(ext, rep, lattice)
    hn, chain = hn_chain_from_profile(ext, rep.dim, lattice, ranks)
    return HNFiltration(hn_type=hn, subspaces=tuple(lattice.bases[i] for i in chain),
                        generated=tuple(tuple(int(x) for x in ranks[i]) for i in chain))


def _all_modules(ext: ExtensionData, v: ExtDimVector, p: int) -> Iterator[QRep]:
    shapes = [(a.name, v.d[a.target], v.d[a.source]) for a in ext.quiver.arrows]
    size = sum(rows * cols for _, rows, cols in shapes)
    digits = p ** np.arange(size, dtype=np.int64)
    for index in range(p ** size):
        flat = (index // digits) % p if size else np.zeros(0, dtype=np.int64)
        matrices, offset = {}, 0
        for name, rows, cols in shapes:
            matrices[name] = flat[offset:offset + rows * cols].reshape(rows, cols).astype(np.int64)
            offset += rows * cols
        yield QRep(quiver=ext.quiver, p=p, dims=v.d, matrices=matrices)


class EnumerationPlan(BaseModel):
    """Every module M that admits a surjection from T^s, with the kernel basis of the f-constraints."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: int
    v: ExtDimVector
    entries: List[Tuple[QRep, HomSpace]]
    candidates: int = Field(..., description="Number of (M, f) pairs the enumeration visits")


def _reachable(space: HomSpace, v: ExtDimVector, ext: ExtensionData, field: PrimeField) -> bool:
    blocks = space.unpack_batch(space.basis)
    for vertex in ext.quiver.vertices:
        if v.d[vertex] == 0:
            continue
        if space.dim == 0 or field.rank(np.hstack(list(blocks[vertex]))) < v.d[vertex]:
            return False
    return True


def enumeration_plan(ext: ExtensionData, v: ExtDimVector, p: int, budget: int) -> EnumerationPlan:
    """
    Factors the enumeration through M: for each M the admissible f form the
    solution space of a linear system. M is skipped when some vertex cannot
    be reached by any admissible f.
    """
    modules = p ** sum(v.d[a.target] * v.d[a.source] for a in ext.quiver.arrows)
    if modules > budget:
        raise BudgetExceededError(f"{modules} modules of dimension {v.d} over F_{p} exceed the budget {budget}")
    field = prime_field(p)
    source = tensor_rep(ext, p, v.s)
    entries, candidates = [], 0
    for base in _all_modules(ext, v, p):
        space = hom_space(source, base)
        if not _reachable(space, v, ext, field):
            continue
        candidates += p ** space.dim
        if candidates > budget:
            raise BudgetExceededError(f"enumerating {v} over F_{p} needs more than {budget} candidate points")
        entries.append((base, space))
    logger.info("enumeration of %s over F_%d: %d modules, %d candidate points", v, p, len(entries), candidates)
    return EnumerationPlan(p=p, v=v, entries=entries, candidates=candidates)


def iter_full_points(ext: ExtensionData, v: ExtDimVector, p: int, budget: int,
                     batch_size: int = BATCH_SIZE) -> Iterator[Tuple[QRep, Dict[str, np.ndarray]]]:
    """
    Yields (M, f) with f a stack of shape (N, d_i, t_i s) per vertex,
    restricted to surjective structure maps. Covers Rep^full(F_p) exactly once.
    """
    if v.s == 0:
        if v.d.is_zero:
            base = QRep(quiver=ext.quiver, p=p, dims=v.d,
                        matrices={a.name: np.zeros((0, 0), dtype=np.int64) for a in ext.quiver.arrows})
            yield base, {vertex: np.zeros((1, 0, 0), dtype=np.int64) for vertex in ext.quiver.vertices}
        return
    field = prime_field(p)
    plan = enumeration_plan(ext, v, p, budget)
    for base, space in plan.entries:
        k = space.dim
        total = p ** k
        digits = p ** np.arange(k, dtype=np.int64)
        for start in range(0, total, batch_size):
            index = np.arange(start, min(start + batch_size, total), dtype=np.int64)
            coefficients = (index[:, None] // digits[None, :]) % p
            if k:
                flat = field.matmul(coefficients, space.basis)
            else:
                flat = np.zeros((index.size, space.size), dtype=np.int64)
            f = space.unpack_batch(flat)
            full = np.ones(index.size, dtype=bool)
            for vertex in ext.quiver.vertices:
                if v.d[vertex]:
                    full &= field.batched_rank(f[vertex]) == v.d[vertex]
            if full.any():
                yield base, {vertex: block[full] for vertex, block in f.items()}


def count_rep_full_points(ext: ExtensionData, v: ExtDimVector, p: int, budget: int = 10**8) -> int:
    """|Rep^full_(s,d)(F_p)|, exact."""
    total = sum(next(iter(f.values())).shape[0] for _, f in iter_full_points(ext, v, p, budget))
    logger.info("|Rep^full %s (F_%d)| = %d", v, p, total)
    return total


def _tally_profiles(profiles: np.ndarray, tally: Counter) -> None:
    count = profiles.shape[0]
    flat = profiles.reshape(count, -1)
    if flat.shape[1] == 0:
        tally[()] += count
        return
    unique, counts = np.unique(flat, axis=0, return_counts=True)
    for row, n in zip(unique, counts):
        tally[tuple(int(x) for x in row)] += int(n)


def full_profile(v: ExtDimVector, lattice: SubspaceLattice, proper_ranks: Tuple[int, ...]) -> np.ndarray:
    """Completes the ranks of the proper subspaces of a full point with the rows for 0 and V."""
    n = len(v.d.dims)
    ranks = np.zeros((len(lattice), n), dtype=np.int64)
    if proper_ranks:
        ranks[1:lattice.top] = np.array(proper_ranks, dtype=np.int64).reshape(-1, n)
    ranks[lattice.top] = v.d.dims
    return ranks


def stratum_counts(ext: ExtensionData, v: ExtDimVector, p: int, budget: int = 10**8) -> Dict[HNType, int]:
    """Number of full points over F_p of every HN type, by exhaustive enumeration."""
    if v.is_zero:
        raise ZeroDimensionError("the dimension type (0,0) has no HN strata")
    if v.s == 0:
        return {}
    lattice = subspace_lattice(p, v.s, budget)
    tally: Counter = Counter()
    for _, f in iter_full_points(ext, v, p, budget):
        _tally_profiles(batched_profiles(ext, f, lattice, lattice.proper), tally)
    counts: Dict[HNType, int] = Counter()
    for key, n in tally.items():
        hn, _ = hn_chain_from_profile(ext, v, lattice, full_profile(v, lattice, key))
        counts[hn] += n
    logger.info("census of %s over F_%d: %d full points in %d strata", v, p, sum(counts.values()), len(counts))
    return dict(sorted(counts.items(), key=lambda item: item[0].flatten()))


def stable_points(ext: ExtensionData, v: ExtDimVector, p: int,
                  budget: int = 10**8) -> Iterator[Tuple[QRep, Dict[str, np.ndarray]]]:
    """Batches of King-stable points over F_p."""
    lattice = subspace_lattice(p, v.s, budget)
    verdicts: Dict[Tuple[int, ...], KingVerdict] = {}
    for base, f in iter_full_points(ext, v, p, budget):
        profiles = batched_profiles(ext, f, lattice, lattice.proper)
        count = profiles.shape[0]
        flat = profiles.reshape(count, -1)
        if flat.shape[1] == 0:
            unique, inverse = np.zeros((1, 0), dtype=np.int64), np.zeros(count, dtype=np.int64)
        else:
            unique, inverse = np.unique(flat, axis=0, return_inverse=True)
            inverse = inverse.reshape(-1)
        stable = np.zeros(len(unique), dtype=bool)
        for row, key in enumerate(unique):
            key = tuple(int(x) for x in key)
            if key not in verdicts:
                verdicts[key] = king_from_profile(v, lattice, full_profile(v, lattice, key))
            stable[row] = verdicts[key] is KingVerdict.STABLE
        mask = stable[inverse]
        if mask.any():
            yield base, {vertex: block[mask] for vertex, block in f.items()}


class SemistableSearch(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    found: bool
    prime: int
    exhaustive: bool = Field(..., description="The answer rests on a complete enumeration")
    point: Optional[FqRep] = None


def find_semistable_point(ext: ExtensionData, v: ExtDimVector, p: int, seed: int, trials: int = 16,
                          budget: int = 10**8) -> SemistableSearch:
    """
    Looks for a King-semistable point over F_p: random witnesses first,
    then the complete enumeration of Rep^full (semistable points are full).
    """
    lattice = subspace_lattice(p, v.s, budget)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        point = random_point(ext, v, p, rng)
        if king_from_profile(v, lattice, point_profile(ext, point, lattice)).is_semistable:
            return SemistableSearch(found=True, prime=p, exhaustive=False, point=point)
    for base, f in iter_full_points(ext, v, p, budget):
        ranks = batched_profiles(ext, f, lattice, range(len(lattice)))
        for n in range(ranks.shape[0]):
            if king_from_profile(v, lattice, ranks[n]).is_semistable:
                point = FqRep(base=base, s=v.s, f={vertex: block[n] for vertex, block in f.items()})
                return SemistableSearch(found=True, prime=p, exhaustive=True, point=point)
    return SemistableSearch(found=False, prime=p, exhaustive=True)


def semistable_point_exists(ext: ExtensionData, v: ExtDimVector, primes: Tuple[int, ...], seed: int,
                            budget: int = 10**8) -> SemistableSearch:
    """
    Small fields may miss semistable points; escalates through `primes`
    while the enumeration fits the budget and reports the last answer.
    """
    result: Optional[SemistableSearch] = None
    for p in primes:
        try:
            result = find_semistable_point(ext, v, p, seed, budget=budget)
        except BudgetExceededError:
            if result is None:
                raise
            logger.info("escalation of %s beyond F_%d stopped by the budget", v, result.prime)
            break
        if result.found:
            break
    return result
