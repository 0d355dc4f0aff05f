"""
Explicit representations over F_p.

A point of Rep_(s,d)(A[T]) is stored as a QRep M of dimension d together
with the structure map f, one matrix f_i : T_i (x) k^s -> M_i per vertex.
Columns of f_i are indexed l*s + k for the basis vector e_l of T_i and the
basis vector k of V = k^s, so the arrow rho_{l,(i)} is the column block
f_i[:, l*s:(l+1)*s] and T_a (x) id_s is kron(T_a, I_s).
"""
import logging
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core import build_extended_quiver, euler_form_q, rho_name
from app.exceptions import DimensionMismatchError, ShapeMismatchError
from app.models import DimVector, ExtDimVector, ExtendedQuiver, ExtensionData, Quiver
from app.oracle.field import PrimeField

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def prime_field(p: int) -> PrimeField:
    return PrimeField(p)


class QRep(BaseModel):
    """
    A representation of the base quiver over F_p.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    quiver: Quiver
    p: int = Field(..., description="Characteristic of the field")
    dims: DimVector
    matrices: Dict[str, np.ndarray] = Field(..., description="Arrow -> matrix of shape dims(target) x dims(source)")

    @model_validator(mode="after")
    def _check_shapes(self) -> "QRep":
        if self.dims.vertices != self.quiver.vertices:
            raise DimensionMismatchError(f"{self.dims} is not over {list(self.quiver.vertices)}")
        for arrow in self.quiver.arrows:
            matrix = self.matrices.get(arrow.name)
            expected = (self.dims[arrow.target], self.dims[arrow.source])
            if matrix is None or matrix.shape != expected:
                got = None if matrix is None else matrix.shape
                raise ShapeMismatchError(f"arrow '{arrow.name}' needs a {expected} matrix, got {got}")
        return self

    @property
    def field(self) -> PrimeField:
        return prime_field(self.p)

    @classmethod
    def build(cls, quiver: Quiver, p: int, dims: DimVector, matrices: Dict[str, np.ndarray]) -> "QRep":
        """Reduces every matrix mod p before validation."""
        field = prime_field(p)
        reduced = {name: field.reduce(matrix).reshape(dims[quiver.arrow(name).target], dims[quiver.arrow(name).source])
                   for name, matrix in matrices.items()}
        return cls(quiver=quiver, p=p, dims=dims, matrices=reduced)

    @classmethod
    def random(cls, quiver: Quiver, dims: DimVector, p: int, rng: np.random.Generator) -> "QRep":
        field = prime_field(p)
        matrices = {a.name: field.random_matrix(rng, dims[a.target], dims[a.source]) for a in quiver.arrows}
        return cls(quiver=quiver, p=p, dims=dims, matrices=matrices)

    def act(self, g: Dict[str, np.ndarray]) -> "QRep":
        """Base change (g_j M_a g_i^{-1})_a."""
        field = self.field
        inverses = {v: field.inverse(g[v]) if self.dims[v] else g[v] for v in self.quiver.vertices}
        matrices = {}
        for arrow in self.quiver.arrows:
            matrices[arrow.name] = field.matmul(field.matmul(g[arrow.target], self.matrices[arrow.name]),
                                                inverses[arrow.source])
        return QRep(quiver=self.quiver, p=self.p, dims=self.dims, matrices=matrices)

    def equals(self, other: "QRep") -> bool:
        return (self.p == other.p and self.dims == other.dims
                and all(np.array_equal(self.matrices[a.name], other.matrices[a.name]) for a in self.quiver.arrows))


class FqRep(BaseModel):
    """
    A representation (M, V, f) of the extended quiver over F_p, V = k^s.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    base: QRep
    s: int = Field(..., ge=0, description="dim V")
    f: Dict[str, np.ndarray] = Field(..., description="Vertex -> structure map of shape d_i x (t_i * s)")

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def field(self) -> PrimeField:
        return self.base.field

    @property
    def dim(self) -> ExtDimVector:
        return ExtDimVector(s=self.s, d=self.base.dims)

    def rho(self, l: int, vertex: str) -> np.ndarray:
        """The block of f_vertex belonging to the l-th basis vector of T (1-based)."""
        return self.f[vertex][:, (l - 1) * self.s:l * self.s]

    def image_dims(self) -> DimVector:
        ranks = tuple(self.field.rank(self.f[v]) for v in self.base.quiver.vertices)
        return self.base.dims.model_copy(update={"dims": ranks})

    @property
    def is_full(self) -> bool:
        return self.image_dims() == self.base.dims

    def satisfies_module_condition(self, ext: ExtensionData) -> bool:
        """M_a f_i = f_j (T_a (x) id_s) for every arrow a: i -> j."""
        field = self.field
        for arrow in ext.quiver.arrows:
            lhs = field.matmul(self.base.matrices[arrow.name], self.f[arrow.source])
            rhs = field.matmul(self.f[arrow.target], tensor_arrow(ext, arrow.name, self.s, self.p))
            if not np.array_equal(lhs, rhs):
                return False
        return True

    def extended_matrices(self, ext: ExtensionData) -> Dict[str, np.ndarray]:
        """The matrices of this point as a representation of Q-hat."""
        matrices = dict(self.base.matrices)
        for vertex in ext.quiver.vertices:
            for l in range(1, ext.t[vertex] + 1):
                matrices[rho_name(l, vertex)] = self.rho(l, vertex).copy()
        return matrices

    def relations_vanish(self, ext: ExtensionData, eq: Optional[ExtendedQuiver] = None) -> bool:
        return relations_vanish(ext, eq or build_extended_quiver(ext), self.p, self.extended_matrices(ext))

    def act(self, g_inf: np.ndarray, g: Dict[str, np.ndarray]) -> "FqRep":
        """
        Base change by (g_inf, g): M_a -> g_j M_a g_i^{-1} and
        f_i -> g_i f_i (id_{T_i} (x) g_inf^{-1}).
        """
        field = self.field
        base = self.base.act(g)
        inf_inverse = field.inverse(g_inf) if self.s else g_inf
        f = {}
        for vertex, block in self.f.items():
            t_i = block.shape[1] // self.s if self.s else 0
            f[vertex] = field.matmul(field.matmul(g[vertex], block), np.kron(np.eye(t_i, dtype=np.int64), inf_inverse))
        return FqRep(base=base, s=self.s, f=f)

    def equals(self, other: "FqRep") -> bool:
        return (self.s == other.s and self.base.equals(other.base)
                and all(np.array_equal(self.f[v], other.f[v]) for v in self.f))


def tensor_arrow(ext: ExtensionData, arrow: str, s: int, p: int) -> np.ndarray:
    """kron(T_a, I_s) mod p."""
    matrix = np.array(ext.matrix(arrow), dtype=np.int64).reshape(ext.t[ext.quiver.arrow(arrow).target],
                                                                  ext.t[ext.quiver.arrow(arrow).source])
    return np.kron(matrix, np.eye(s, dtype=np.int64)) % p


def tensor_rep(ext: ExtensionData, p: int, s: int = 1) -> QRep:
    """T (x) k^s as a QRep; s = 1 gives T itself."""
    matrices = {arrow.name: tensor_arrow(ext, arrow.name, s, p) for arrow in ext.quiver.arrows}
    return QRep(quiver=ext.quiver, p=p, dims=ext.t.scale(s), matrices=matrices)


def relations_vanish(ext: ExtensionData, eq: ExtendedQuiver, p: int, matrices: Dict[str, np.ndarray]) -> bool:
    """Evaluates every relation of Q-hat on a tuple of matrices."""
    field = prime_field(p)
    for relation in eq.relations:
        value = field.matmul(matrices[relation.arrow], matrices[relation.rho])
        for name, coefficient in relation.terms:
            value = value - coefficient * matrices[name]
        if np.any(value % p):
            return False
    return True


def from_extended_matrices(ext: ExtensionData, v: ExtDimVector, p: int, matrices: Dict[str, np.ndarray]) -> FqRep:
    """Inverse of FqRep.extended_matrices: reassembles (M, f) from Q-hat data."""
    field = prime_field(p)
    base = QRep.build(ext.quiver, p, v.d, {a.name: matrices[a.name] for a in ext.quiver.arrows})
    f = {}
    for vertex in ext.quiver.vertices:
        blocks = [field.reduce(matrices[rho_name(l, vertex)]).reshape(v.d[vertex], v.s)
                  for l in range(1, ext.t[vertex] + 1)]
        f[vertex] = np.hstack(blocks) if blocks else np.zeros((v.d[vertex], 0), dtype=np.int64)
    return FqRep(base=base, s=v.s, f=f)


class HomSpace(BaseModel):
    """
    Solution space of a hom system, one row of `basis` per basis vector.
    `layout` records (key, rows, cols, offset) for every unknown block.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: int
    basis: np.ndarray
    layout: Tuple[Tuple[str, int, int, int], ...]

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def size(self) -> int:
        return sum(rows * cols for _, rows, cols, _ in self.layout)

    def unpack(self, vector: np.ndarray) -> Dict[str, np.ndarray]:
        return {key: vector[offset:offset + rows * cols].reshape(rows, cols) for key, rows, cols, offset in self.layout}

    def unpack_batch(self, vectors: np.ndarray) -> Dict[str, np.ndarray]:
        count = vectors.shape[0]
        return {key: vectors[:, offset:offset + rows * cols].reshape(count, rows, cols)
                for key, rows, cols, offset in self.layout}

    def combination(self, coefficients: np.ndarray) -> Dict[str, np.ndarray]:
        field = prime_field(self.p)
        if self.dim == 0:
            return self.unpack(np.zeros(self.size, dtype=np.int64))
        return self.unpack(field.matmul(coefficients.reshape(1, -1), self.basis)[0])

    def random_element(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        return self.combination(rng.integers(0, self.p, size=self.dim, dtype=np.int64))


def _layout(blocks: List[Tuple[str, int, int]]) -> Tuple[Tuple[str, int, int, int], ...]:
    layout, offset = [], 0
    for key, rows, cols in blocks:
        layout.append((key, rows, cols, offset))
        offset += rows * cols
    return tuple(layout)


def _linear_columns(fn: Callable[[np.ndarray], np.ndarray], rows: int, cols: int) -> np.ndarray:
    """Matrix of a linear map on rows x cols matrices, one column per elementary matrix."""
    columns = []
    for index in range(rows * cols):
        unit = np.zeros(rows * cols, dtype=np.int64)
        unit[index] = 1
        columns.append(fn(unit.reshape(rows, cols)).ravel())
    if not columns:
        return np.zeros((fn(np.zeros((rows, cols), dtype=np.int64)).size, 0), dtype=np.int64)
    return np.stack(columns, axis=1)


def _q_equations(source: QRep, target: QRep, offsets: Dict[str, int], width: int) -> List[np.ndarray]:
    """Rows of N_a X_i - X_j M_a = 0, vectorized row-major."""
    equations = []
    for arrow in source.quiver.arrows:
        i, j = arrow.source, arrow.target
        src_i, src_j = source.dims[i], source.dims[j]
        tgt_i, tgt_j = target.dims[i], target.dims[j]
        if tgt_j * src_i == 0:
            continue
        block = np.zeros((tgt_j * src_i, width), dtype=np.int64)
        left = np.kron(target.matrices[arrow.name], np.eye(src_i, dtype=np.int64))
        right = np.kron(np.eye(tgt_j, dtype=np.int64), source.matrices[arrow.name].T)
        block[:, offsets[i]:offsets[i] + tgt_i * src_i] += left
        block[:, offsets[j]:offsets[j] + tgt_j * src_j] -= right
        equations.append(block)
    return equations


def hom_space(source: QRep, target: QRep) -> HomSpace:
    """Basis of Hom_A(source, target) over F_p by Gaussian elimination."""
    if source.quiver != target.quiver or source.p != target.p:
        raise DimensionMismatchError("representations live over different quivers or fields")
    vertices = source.quiver.vertices
    layout = _layout([(v, target.dims[v], source.dims[v]) for v in vertices])
    offsets = {key: offset for key, _, _, offset in layout}
    width = sum(rows * cols for _, rows, cols, _ in layout)
    equations = _q_equations(source, target, offsets, width)
    field = source.field
    system = np.vstack(equations) % source.p if equations else np.zeros((0, width), dtype=np.int64)
    basis = field.nullspace(system)
    logger.debug("hom space %s -> %s: %d unknowns, dimension %d", source.dims, target.dims, width, basis.shape[0])
    return HomSpace(p=source.p, basis=basis, layout=layout)


def hom_dim(source: QRep, target: QRep) -> int:
    return hom_space(source, target).dim


def ext_dim(source: QRep, target: QRep) -> int:
    """dim Ext_A over the hereditary path algebra: hom - <dim source, dim target>_Q."""
    return hom_dim(source, target) - euler_form_q(source.quiver, source.dims, target.dims)


def hom_space_ext(ext: ExtensionData, source: FqRep, target: FqRep) -> HomSpace:
    """
    Hom over A[T] as one linear system in (phi_inf, phi_i): the phi_i form a
    map of Q-representations and phi_i f^M_i = f^N_i (id_{T_i} (x) phi_inf).
    """
    field = source.field
    vertices = ext.quiver.vertices
    layout = _layout([("inf", target.s, source.s)] + [(v, target.base.dims[v], source.base.dims[v]) for v in vertices])
    offsets = {key: offset for key, _, _, offset in layout}
    width = sum(rows * cols for _, rows, cols, _ in layout)
    equations = _q_equations(source.base, target.base, offsets, width)
    for vertex in vertices:
        t_i = ext.t[vertex]
        d_src, d_tgt = source.base.dims[vertex], target.base.dims[vertex]
        rows = d_tgt * t_i * source.s
        if rows == 0:
            continue
        block = np.zeros((rows, width), dtype=np.int64)
        f_src, f_tgt = source.f[vertex], target.f[vertex]
        block[:, offsets[vertex]:offsets[vertex] + d_tgt * d_src] += np.kron(np.eye(d_tgt, dtype=np.int64), f_src.T)
        inf = _linear_columns(lambda phi: f_tgt @ np.kron(np.eye(t_i, dtype=np.int64), phi), target.s, source.s)
        block[:, offsets["inf"]:offsets["inf"] + target.s * source.s] -= inf
        equations.append(block)
    system = np.vstack(equations) % source.p if equations else np.zeros((0, width), dtype=np.int64)
    return HomSpace(p=source.p, basis=field.nullspace(system), layout=layout)


def kernel_rep(ext: ExtensionData, rep: FqRep) -> QRep:
    """ker f as a subrepresentation of T (x) V, with the arrows of T (x) id restricted to it."""
    field = rep.field
    vertices = ext.quiver.vertices
    bases = {}
    for vertex in vertices:
        width = ext.t[vertex] * rep.s
        if width == 0:
            bases[vertex] = np.zeros((0, 0), dtype=np.int64)
        else:
            bases[vertex] = field.nullspace(rep.f[vertex]).T
    matrices = {}
    for arrow in ext.quiver.arrows:
        k_src, k_tgt = bases[arrow.source], bases[arrow.target]
        if k_src.shape[1] == 0 or k_tgt.shape[1] == 0:
            matrices[arrow.name] = np.zeros((k_tgt.shape[1], k_src.shape[1]), dtype=np.int64)
            continue
        image = field.matmul(tensor_arrow(ext, arrow.name, rep.s, rep.p), k_src)
        solution = field.solve(k_tgt, image)
        if solution is None:
            raise ShapeMismatchError(f"f is not a module map along '{arrow.name}'")
        matrices[arrow.name] = solution
    dims = ext.quiver.dim_vector([bases[v].shape[1] for v in vertices])
    return QRep(quiver=ext.quiver, p=rep.p, dims=dims, matrices=matrices)


def point_from_hom(ext: ExtensionData, base: QRep, s: int, f: Dict[str, np.ndarray]) -> FqRep:
    return FqRep(base=base, s=s, f={v: f[v] for v in ext.quiver.vertices})


def random_point(ext: ExtensionData, v: ExtDimVector, p: int, rng: np.random.Generator,
                 base: Optional[QRep] = None) -> FqRep:
    """A random M (unless given) and a uniformly random module map f: T^s -> M."""
    base = base or QRep.random(ext.quiver, v.d, p, rng)
    space = hom_space(tensor_rep(ext, p, v.s), base)
    return point_from_hom(ext, base, v.s, space.random_element(rng))


def random_full_point(ext: ExtensionData, v: ExtDimVector, p: int, rng: np.random.Generator,
                      attempts: int = 64) -> Optional[FqRep]:
    for _ in range(attempts):
        point = random_point(ext, v, p, rng)
        if point.is_full:
            return point
    return None


def random_group_element(dims: DimVector, s: int, p: int, rng: np.random.Generator) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    field = prime_field(p)
    g = {vertex: field.random_invertible(rng, dims[vertex]) for vertex in dims.vertices}
    return field.random_invertible(rng, s), g
