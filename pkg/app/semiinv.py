"""
Determinantal semi-invariants of Rep_(s,d)(A[T]) and the quotient maps
built from them.

A BlockDetSI is a grid of matrix expressions in named letters; every
letter stands for an arrow of Q-hat (an arrow of Q or some rho_{l,(i)}).
Entries are noncommutative polynomials with integer coefficients such as
"M*A", "A+C" or "0"; the value is sign * det of the assembled matrix.
"""
import logging
import re
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from sympy.parsing.sympy_parser import parse_expr

from app.core import rho_name
from app.exceptions import (DegenerateQuotientError, DegenerateSemiInvariantError, ShapeMismatchError,
                            UnsupportedEngineError, WeightFitError)
from app.models import INFINITY, ExtDimVector, ExtensionData
from app.oracle.census import stable_points
from app.oracle.representations import FqRep, QRep, prime_field, random_group_element, random_point

logger = logging.getLogger(__name__)

_RHO = re.compile(r"^rho(\d+)_(.+)$")

Term = Tuple[int, Tuple[str, ...]]


def _parse_entry(text: str, letters: Dict[str, str]) -> List[Term]:
    symbols = {name: sympy.Symbol(name, commutative=False) for name in letters}
    try:
        expr = sympy.expand(parse_expr(text, local_dict=symbols))
    except (SyntaxError, TypeError, sympy.SympifyError) as e:
        raise ValueError(f"cannot parse block entry '{text}': {e}")
    unknown = {str(sym) for sym in expr.free_symbols} - set(letters)
    if unknown:
        raise ValueError(f"block entry '{text}' uses undeclared letters {sorted(unknown)}")
    terms: List[Term] = []
    for term in sympy.Add.make_args(expr):
        if term == 0:
            continue
        coefficient, rest = term.as_coeff_Mul()
        if not coefficient.is_Integer:
            raise ValueError(f"block entry '{text}' has a non-integer coefficient {coefficient}")
        factors: List[str] = []
        for factor in ([] if rest == 1 else sympy.Mul.make_args(rest)):
            if isinstance(factor, sympy.Pow):
                factors.extend([str(factor.base)] * int(factor.exp))
            else:
                factors.append(str(factor))
        terms.append((int(coefficient), tuple(factors)))
    return terms


class BlockDetSI(BaseModel):
    """
    sign * det of a block grid. `letters` maps each letter used in the grid
    to an arrow of Q-hat, e.g. {"A": "rho1_1", "M": "m"}.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    v: ExtDimVector = Field(..., description="Dimension type the layout is square for")
    letters: Dict[str, str]
    grid: Tuple[Tuple[str, ...], ...] = Field(..., min_length=1)
    sign: int = Field(1, description="+1 or -1")

    _terms: List[List[List[Term]]] = PrivateAttr(default_factory=list)

    @model_validator(mode="after")
    def _check_grid(self) -> "BlockDetSI":
        if len({len(row) for row in self.grid}) != 1:
            raise ValueError("every row of the block grid needs the same number of entries")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        for row in self.grid:
            for entry in row:
                _parse_entry(entry, self.letters)
        return self

    def model_post_init(self, __context) -> None:
        self._terms = [[_parse_entry(entry, self.letters) for entry in row] for row in self.grid]

    def block_sizes(self, shapes: Dict[str, Tuple[int, int]]) -> Tuple[List[int], List[int]]:
        rows: List[Optional[int]] = [None] * len(self.grid)
        cols: List[Optional[int]] = [None] * len(self.grid[0])
        for a, row in enumerate(self._terms):
            for b, terms in enumerate(row):
                for _, factors in terms:
                    if not factors:
                        raise ShapeMismatchError(f"{self.name}: a scalar block needs a matrix factor")
                    height, width = shapes[factors[0]][0], shapes[factors[-1]][1]
                    if rows[a] not in (None, height) or cols[b] not in (None, width):
                        raise ShapeMismatchError(f"{self.name}: inconsistent block sizes at ({a}, {b})")
                    rows[a], cols[b] = height, width
        if None in rows or None in cols:
            raise ShapeMismatchError(f"{self.name}: a block row or column is entirely zero")
        if sum(rows) != sum(cols):
            raise ShapeMismatchError(f"{self.name}: assembled matrix is {sum(rows)}x{sum(cols)}")
        return rows, cols

    def assemble(self, p: int, values: Dict[str, np.ndarray], count: int) -> np.ndarray:
        """Stack of assembled matrices, shape (count, n, n); letters may be 2-d or batched 3-d."""
        field = prime_field(p)
        shapes = {name: tuple(array.shape[-2:]) for name, array in values.items()}
        rows, cols = self.block_sizes(shapes)
        size = sum(rows)
        out = np.zeros((count, size, size), dtype=np.int64)
        top = 0
        for a, row in enumerate(self._terms):
            left = 0
            for b, terms in enumerate(row):
                block = np.zeros((count, rows[a], cols[b]), dtype=np.int64)
                for coefficient, factors in terms:
                    product = values[factors[0]]
                    for name in factors[1:]:
                        product = field.matmul(product, values[name])
                    block = (block + coefficient * product) % p
                out[:, top:top + rows[a], left:left + cols[b]] = block
                left += cols[b]
            top += rows[a]
        return out


def _letter_values(si: BlockDetSI, base: QRep, f: Dict[str, np.ndarray], s: int) -> Dict[str, np.ndarray]:
    values = {}
    for letter, target in si.letters.items():
        match = _RHO.match(target)
        if match:
            l, vertex = int(match.group(1)), match.group(2)
            values[letter] = f[vertex][..., (l - 1) * s:l * s]
        elif target in base.matrices:
            values[letter] = base.matrices[target]
        else:
            raise ShapeMismatchError(f"{si.name}: letter {letter} names the unknown arrow '{target}'")
    return values


def evaluate_batch(si: BlockDetSI, base: QRep, f: Dict[str, np.ndarray], s: int) -> np.ndarray:
    """Values of si on a stack of points sharing the module M."""
    count = next(iter(f.values())).shape[0]
    stack = si.assemble(base.p, _letter_values(si, base, f, s), count)
    return (si.sign * prime_field(base.p).batched_det(stack)) % base.p


def evaluate_si(si: BlockDetSI, rep: FqRep) -> int:
    if rep.dim != si.v:
        raise ShapeMismatchError(f"{si.name} is declared for {si.v}, the point has {rep.dim}")
    stacked = {vertex: block[None, :, :] for vertex, block in rep.f.items()}
    return int(evaluate_batch(si, rep.base, stacked, rep.s)[0])


class WeightVector(BaseModel):
    """Exponents w with si(g.x) = prod_k det(g_k)^{w_k} si(x); the key "inf" is the extension vertex."""
    weights: Dict[str, int]

    def character(self, p: int, dets: Dict[str, int]) -> int:
        value = 1
        for key, w in self.weights.items():
            value = value * pow(dets[key], w, p) % p
        return value


def _nonzero_sample(ext: ExtensionData, si: BlockDetSI, p: int, rng: np.random.Generator,
                    attempts: int) -> FqRep:
    for _ in range(attempts):
        point = random_point(ext, si.v, p, rng)
        if evaluate_si(si, point):
            return point
    raise DegenerateSemiInvariantError(f"{si.name} vanished on {attempts} random points")


def verify_weight(ext: ExtensionData, si: BlockDetSI, p: int, trials: int, seed: int,
                  bound: int = 6) -> WeightVector:
    """
    Fits the weight of every vertex separately, moving one vertex at a time,
    then confirms the full character on independent samples.
    """
    field = prime_field(p)
    rng = np.random.default_rng(seed)
    v = si.v
    keys = [INFINITY] + list(v.d.vertices)
    sizes = {INFINITY: v.s, **v.d.entries}
    weights: Dict[str, int] = {}
    for key in keys:
        if sizes[key] == 0:
            weights[key] = 0
            continue
        candidates = set(range(-bound, bound + 1))
        for _ in range(trials):
            point = _nonzero_sample(ext, si, p, rng, 4 * trials)
            g_inf = np.eye(v.s, dtype=np.int64)
            g = {vertex: np.eye(v.d[vertex], dtype=np.int64) for vertex in v.d.vertices}
            moved = field.random_invertible(rng, sizes[key])
            if key == INFINITY:
                g_inf = moved
            else:
                g[key] = moved
            ratio = evaluate_si(si, point.act(g_inf, g)) * field.inv(evaluate_si(si, point)) % p
            det = field.det(moved)
            candidates &= {w for w in candidates if pow(det, w, p) == ratio}
            if not candidates:
                raise WeightFitError(f"{si.name}: no weight in [-{bound}, {bound}] fits vertex {key}")
        weights[key] = min(candidates, key=lambda w: (abs(w), w))
    fitted = WeightVector(weights=weights)
    for _ in range(trials):
        point = _nonzero_sample(ext, si, p, rng, 4 * trials)
        g_inf, g = random_group_element(v.d, v.s, p, rng)
        dets = {INFINITY: field.det(g_inf), **{vertex: field.det(g[vertex]) for vertex in v.d.vertices}}
        if evaluate_si(si, point.act(g_inf, g)) != fitted.character(p, dets) * evaluate_si(si, point) % p:
            raise WeightFitError(f"{si.name}: the fitted weights {weights} fail on a joint sample")
    logger.info("%s has weights %s", si.name, weights)
    return fitted


def _running_letters(ext: ExtensionData) -> Dict[str, str]:
    q = ext.quiver
    if len(q.arrows) != 1 or ext.t.dims != (3, 1) or ext.t_matrices is None:
        raise UnsupportedEngineError("built-in semi-invariants exist for T = (k^3 -> k) over 1 -> 2 only")
    arrow = q.arrows[0]
    source = arrow.source
    return {"A": rho_name(1, source), "B": rho_name(2, source), "C": rho_name(3, source), "M": arrow.name}


_SMALL = {
    "h0": (-1, (("A", "B", "C"), ("0", "M*A", "0"), ("0", "0", "M*A"))),
    "h1": (1, (("A", "B"),)),
    "h2": (1, (("A", "C"),)),
    "h3": (1, (("A+C", "B"),)),
    "h4": (1, (("A", "B+C"),)),
    "h5": (1, (("A+C", "B+C"),)),
}

_LARGE = {
    "h0": (1, (("M*A", "0", "0", "0", "-M*A", "0"),
               ("0", "M*A", "0", "0", "0", "-M*A"),
               ("0", "0", "M*A", "0", "0", "-M*A"),
               ("A", "0", "C", "0", "B", "0"),
               ("0", "B", "0", "A", "0", "C"))),
    "h1": (1, (("A", "B"),)),
    "h2": (1, (("A", "C"),)),
    "h3": (1, (("A+C", "B"),)),
    "h4": (1, (("A+B", "C"),)),
    "h5": (1, (("A", "B+C"),)),
    "h6": (1, (("A+B", "B+C"),)),
    "h7": (1, (("A+C", "B+C"),)),
}


def builtin_semi_invariants(ext: ExtensionData, v: ExtDimVector) -> Dict[str, BlockDetSI]:
    """The generating semi-invariants of the two worked dimension types (2,(4,1)) and (3,(6,2))."""
    letters = _running_letters(ext)
    layouts = {(2, (4, 1)): _SMALL, (3, (6, 2)): _LARGE}.get((v.s, v.d.dims))
    if layouts is None:
        raise UnsupportedEngineError(f"no built-in semi-invariants for {v}")
    return {name: BlockDetSI(name=name, v=v, letters=letters, grid=grid, sign=sign)
            for name, (sign, grid) in layouts.items()}


def _normalize(values: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Scales every row so its first nonzero entry is 1; returns (rows, nonzero mask)."""
    field = prime_field(p)
    nonzero = values.any(axis=1)
    first = np.argmax(values != 0, axis=1)
    leading = values[np.arange(values.shape[0]), first]
    scale = np.ones(values.shape[0], dtype=np.int64)
    if nonzero.any():
        scale[nonzero] = field.inverse_array(leading[nonzero])
    return (values * scale[:, None]) % p, nonzero


def quotient_coords_batch(sis: Dict[str, BlockDetSI], base: QRep, f: Dict[str, np.ndarray],
                          s: int) -> Tuple[np.ndarray, np.ndarray]:
    """(h0*h1, h0*h2, ...) for a stack of points, normalized projectively."""
    p = base.p
    h0 = evaluate_batch(sis["h0"], base, f, s)
    others = [name for name in sorted(sis) if name != "h0"]
    values = np.stack([(h0 * evaluate_batch(sis[name], base, f, s)) % p for name in others], axis=1)
    return _normalize(values, p)


def quotient_coords(ext: ExtensionData, rep: FqRep) -> Tuple[int, ...]:
    """The point of projective space a stable point maps to."""
    sis = builtin_semi_invariants(ext, rep.dim)
    stacked = {vertex: block[None, :, :] for vertex, block in rep.f.items()}
    coords, nonzero = quotient_coords_batch(sis, rep.base, stacked, rep.s)
    if not nonzero[0]:
        raise DegenerateQuotientError(f"all quotient coordinates vanish at a point of {rep.dim}")
    return tuple(int(x) for x in coords[0])


class QuotientImageReport(BaseModel):
    v: ExtDimVector
    p: int
    stable_points: int
    images: int = Field(..., description="Distinct projective points hit by stable points")
    degenerate: int = Field(..., description="Stable points where every coordinate vanishes")


def quotient_image_count(ext: ExtensionData, v: ExtDimVector, p: int, budget: int = 10**8) -> QuotientImageReport:
    """Image of the stable locus of Rep(F_p) under the quotient map, by complete enumeration."""
    sis = builtin_semi_invariants(ext, v)
    images = set()
    total = degenerate = 0
    for base, f in stable_points(ext, v, p, budget):
        coords, nonzero = quotient_coords_batch(sis, base, f, v.s)
        total += coords.shape[0]
        degenerate += int((~nonzero).sum())
        if nonzero.any():
            images.update(map(tuple, np.unique(coords[nonzero], axis=0).tolist()))
    if degenerate:
        logger.warning("%d stable points of %s over F_%d have vanishing quotient coordinates", degenerate, v, p)
    return QuotientImageReport(v=v, p=p, stable_points=total, images=len(images), degenerate=degenerate)


def orbit_points(ext: ExtensionData, v: ExtDimVector, p: int, count: int,
                 seed: int) -> Iterator[Tuple[FqRep, FqRep]]:
    """Pairs (x, g.x) for random points x and random group elements g."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        point = random_point(ext, v, p, rng)
        g_inf, g = random_group_element(v.d, v.s, p, rng)
        yield point, point.act(g_inf, g)
