from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from app.exceptions import DimensionMismatchError, ExplicitModuleRequiredError, InvalidHNTypeError, ZeroDimensionError

INFINITY = "inf"

IntMatrix = Tuple[Tuple[int, ...], ...]


class Arrow(BaseModel):
    """
    An arrow of a quiver.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, description="Unique arrow name")
    source: str = Field(..., description="Source vertex")
    target: str = Field(..., description="Target vertex")

    def __repr__(self):
        return f"<Arrow({self.name}: {self.source}->{self.target})>"


def _topological_order(vertices: Sequence[str], arrows: Sequence[Arrow]) -> Optional[Tuple[str, ...]]:
    indegree = {v: 0 for v in vertices}
    for arrow in arrows:
        indegree[arrow.target] += 1
    ready = [v for v in vertices if indegree[v] == 0]
    order: List[str] = []
    while ready:
        vertex = ready.pop(0)
        order.append(vertex)
        for arrow in arrows:
            if arrow.source == vertex:
                indegree[arrow.target] -= 1
                if indegree[arrow.target] == 0:
                    ready.append(arrow.target)
    return tuple(order) if len(order) == len(vertices) else None


class Quiver(BaseModel):
    """
    A finite quiver. Acyclicity is decided once at construction time;
    a cycle does not make the quiver invalid, it only gates the engines
    that need a topological order.
    """
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[str, ...] = Field(..., min_length=1, description="Ordered vertex identifiers")
    arrows: Tuple[Arrow, ...] = Field((), description="Arrows (name, source, target)")

    _order: Optional[Tuple[str, ...]] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_references(self) -> "Quiver":
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("vertex identifiers must be unique")
        names = [arrow.name for arrow in self.arrows]
        if len(set(names)) != len(names):
            raise ValueError("arrow names must be unique")
        for arrow in self.arrows:
            if arrow.source not in self.vertices or arrow.target not in self.vertices:
                raise ValueError(f"arrow '{arrow.name}' references an unknown vertex")
        return self

    def model_post_init(self, __context) -> None:
        self._order = _topological_order(self.vertices, self.arrows)

    @property
    def is_acyclic(self) -> bool:
        return self._order is not None

    @property
    def topological_order(self) -> Tuple[str, ...]:
        if self._order is None:
            raise ValueError("quiver has an oriented cycle")
        return self._order

    def index(self, vertex: str) -> int:
        return self.vertices.index(vertex)

    def arrow(self, name: str) -> Arrow:
        for arrow in self.arrows:
            if arrow.name == name:
                return arrow
        raise KeyError(name)

    def dim_vector(self, dims: Sequence[int]) -> "DimVector":
        return DimVector(vertices=self.vertices, dims=tuple(dims))

    def zero(self) -> "DimVector":
        return self.dim_vector([0] * len(self.vertices))


class DimVector(BaseModel):
    """
    A dimension vector, stored in the vertex order of its quiver.
    """
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[str, ...]
    dims: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_entries(self) -> "DimVector":
        if len(self.vertices) != len(self.dims):
            raise ValueError("dimension vector needs exactly one entry per vertex")
        if any(value < 0 for value in self.dims):
            raise ValueError("dimension vector entries must be nonnegative")
        return self

    @classmethod
    def from_mapping(cls, quiver: Quiver, entries: Mapping[str, int]) -> "DimVector":
        if set(entries) != set(quiver.vertices):
            raise DimensionMismatchError(f"keys {sorted(entries)} are not the vertex set {list(quiver.vertices)}")
        return cls(vertices=quiver.vertices, dims=tuple(entries[v] for v in quiver.vertices))

    @property
    def entries(self) -> Dict[str, int]:
        return dict(zip(self.vertices, self.dims))

    def __getitem__(self, vertex: str) -> int:
        return self.dims[self.vertices.index(vertex)]

    @property
    def total(self) -> int:
        return sum(self.dims)

    @property
    def is_zero(self) -> bool:
        return not any(self.dims)

    def _same_vertices(self, other: "DimVector") -> None:
        if self.vertices != other.vertices:
            raise DimensionMismatchError(f"vertex sets differ: {self.vertices} vs {other.vertices}")

    def __add__(self, other: "DimVector") -> "DimVector":
        self._same_vertices(other)
        return DimVector(vertices=self.vertices, dims=tuple(a + b for a, b in zip(self.dims, other.dims)))

    def __sub__(self, other: "DimVector") -> "DimVector":
        self._same_vertices(other)
        if not other.le(self):
            raise DimensionMismatchError(f"cannot subtract {other} from {self}")
        return DimVector(vertices=self.vertices, dims=tuple(a - b for a, b in zip(self.dims, other.dims)))

    def scale(self, factor: int) -> "DimVector":
        return DimVector(vertices=self.vertices, dims=tuple(factor * a for a in self.dims))

    def le(self, other: "DimVector") -> bool:
        """Componentwise comparison."""
        self._same_vertices(other)
        return all(a <= b for a, b in zip(self.dims, other.dims))

    def __str__(self):
        return ",".join(str(a) for a in self.dims)


class ExtDimVector(BaseModel):
    """
    A dimension vector of the extended quiver: s at the extension vertex
    plus d over the base quiver. s is kept apart from d on purpose so that
    extended vectors never reach the base Euler form.
    """
    model_config = ConfigDict(frozen=True)

    s: int = Field(..., ge=0, description="Dimension at the extension vertex")
    d: DimVector

    @classmethod
    def parse(cls, text: str, vertices: Sequence[str]) -> "ExtDimVector":
        """Parse the CLI form "s:d1,d2,..." against an ordered vertex list."""
        head, sep, tail = text.strip().partition(":")
        if not sep:
            raise DimensionMismatchError(f"expected 's:d1,d2,...', got '{text}'")
        try:
            s = int(head)
            dims = tuple(int(part) for part in tail.split(",")) if tail.strip() else ()
        except ValueError:
            raise DimensionMismatchError(f"non-integer entry in '{text}'")
        if len(dims) != len(vertices):
            raise DimensionMismatchError(f"'{text}' has {len(dims)} entries, the quiver has {len(vertices)} vertices")
        if s < 0 or any(a < 0 for a in dims):
            raise DimensionMismatchError(f"negative entry in '{text}'")
        return cls(s=s, d=DimVector(vertices=tuple(vertices), dims=dims))

    @property
    def total(self) -> int:
        return self.s + self.d.total

    @property
    def is_zero(self) -> bool:
        return self.s == 0 and self.d.is_zero

    @property
    def slope(self) -> Fraction:
        if self.is_zero:
            raise ZeroDimensionError("slope of the zero vector is undefined")
        return Fraction(self.s, self.total)

    def __add__(self, other: "ExtDimVector") -> "ExtDimVector":
        return ExtDimVector(s=self.s + other.s, d=self.d + other.d)

    def __sub__(self, other: "ExtDimVector") -> "ExtDimVector":
        if other.s > self.s:
            raise DimensionMismatchError(f"cannot subtract {other} from {self}")
        return ExtDimVector(s=self.s - other.s, d=self.d - other.d)

    def le(self, other: "ExtDimVector") -> bool:
        return self.s <= other.s and self.d.le(other.d)

    def flatten(self) -> Tuple[int, ...]:
        return (self.s,) + self.d.dims

    def cli_form(self) -> str:
        return f"{self.s}:{self.d}"

    def __str__(self):
        return f"({self.s}|{self.d})"


class ExtensionData(BaseModel):
    """
    A one-point extension A[T] of the path algebra of `quiver` by the module T.
    """
    model_config = ConfigDict(frozen=True)

    quiver: Quiver
    t: DimVector = Field(..., description="Dimension vector of T")
    t_matrices: Optional[Dict[str, IntMatrix]] = Field(None, description="Arrow -> matrix of shape t(target) x t(source)")
    assume_rigid: bool = Field(False, description="User asserts Ext_A(T,T) = 0")
    assume_end_trivial: bool = Field(False, description="User asserts End_A(T) = k")
    rigidity_verified: bool = Field(False, description="Rigidity was verified by the finite-field oracle")

    @model_validator(mode="after")
    def _check_module(self) -> "ExtensionData":
        if INFINITY in self.quiver.vertices:
            raise ValueError(f"vertex '{INFINITY}' is reserved for the extension vertex")
        if self.t.vertices != self.quiver.vertices:
            raise ValueError("t must be over the quiver's vertices")
        if self.t_matrices is None:
            return self
        missing = [a.name for a in self.quiver.arrows if a.name not in self.t_matrices]
        unknown = [name for name in self.t_matrices if name not in {a.name for a in self.quiver.arrows}]
        if missing or unknown:
            raise ValueError(f"matrices missing for {missing}, unknown arrows {unknown}")
        for arrow in self.quiver.arrows:
            matrix = self.t_matrices[arrow.name]
            rows, cols = self.t[arrow.target], self.t[arrow.source]
            if len(matrix) != rows or any(len(row) != cols for row in matrix):
                raise ValueError(f"matrix of '{arrow.name}' must have shape {rows}x{cols}")
        return self

    def __hash__(self):
        return hash(self.fingerprint())

    @property
    def is_rigid(self) -> bool:
        return self.assume_rigid or self.rigidity_verified

    def fingerprint(self) -> Tuple:
        """Identity of A[T] for cache keys: the quiver, t and the iso data of T."""
        arrows = tuple((a.name, a.source, a.target) for a in self.quiver.arrows)
        matrices = None if self.t_matrices is None else tuple(sorted(self.t_matrices.items()))
        return (self.quiver.vertices, arrows, self.t.dims, matrices)

    def matrix(self, arrow: str) -> IntMatrix:
        if self.t_matrices is None:
            raise ExplicitModuleRequiredError()
        return self.t_matrices[arrow]

    def vector(self, dims: Sequence[int]) -> DimVector:
        return self.quiver.dim_vector(dims)

    def ext_vector(self, s: int, dims: Sequence[int]) -> ExtDimVector:
        return ExtDimVector(s=s, d=self.vector(dims))

    def __repr__(self):
        return f"<ExtensionData(t={self.t}, arrows={[a.name for a in self.quiver.arrows]})>"


class Relation(BaseModel):
    """
    arrow * rho - sum(coefficient * term) = 0, with rho an arrow inf -> source(arrow)
    and every term an arrow inf -> target(arrow).
    """
    model_config = ConfigDict(frozen=True)

    arrow: str
    rho: str
    terms: Tuple[Tuple[str, int], ...] = ()

    def paths(self) -> List[Tuple[int, Tuple[str, ...]]]:
        """Formal sum as (coefficient, path) pairs, paths written right to left."""
        return [(1, (self.arrow, self.rho))] + [(-c, (name,)) for name, c in self.terms]

    def __str__(self):
        rhs = " + ".join(f"{c}*{name}" if c != 1 else name for name, c in self.terms) or "0"
        return f"{self.arrow}*{self.rho} = {rhs}"


class ExtendedQuiver(BaseModel):
    """
    The quiver Q-hat: Q plus the vertex inf and one arrow inf -> i per basis vector of T_i.
    """
    model_config = ConfigDict(frozen=True)

    quiver: Quiver
    relations: Tuple[Relation, ...]
    rho_arrows: Dict[str, Tuple[str, ...]]

    def __hash__(self):
        return hash((self.quiver, self.relations))


class HNType(BaseModel):
    """
    An ordered tuple of dimension types with strictly decreasing slopes.
    """
    model_config = ConfigDict(frozen=True)

    steps: Tuple[ExtDimVector, ...] = Field(..., min_length=1)

    _weight: Optional[ExtDimVector] = PrivateAttr(default=None)

    @field_validator("steps")
    @classmethod
    def _check_steps(cls, steps: Tuple[ExtDimVector, ...]) -> Tuple[ExtDimVector, ...]:
        if any(step.is_zero for step in steps):
            raise InvalidHNTypeError("every step of an HN type must be nonzero")
        if len({step.d.vertices for step in steps}) != 1:
            raise InvalidHNTypeError("steps are over different vertex sets")
        slopes = [step.slope for step in steps]
        if any(a <= b for a, b in zip(slopes, slopes[1:])):
            raise InvalidHNTypeError(f"slopes must strictly decrease: {[str(s) for s in slopes]}")
        if steps[-1].s != 0 and any(step.s == 0 for step in steps):
            raise InvalidHNTypeError("a step with s = 0 can only be the last one")
        return steps

    def model_post_init(self, __context) -> None:
        weight = self.steps[0]
        for step in self.steps[1:]:
            weight = weight + step
        self._weight = weight

    @property
    def weight(self) -> ExtDimVector:
        return self._weight

    @property
    def length(self) -> int:
        return len(self.steps)

    def flatten(self) -> Tuple[int, ...]:
        return tuple(x for step in self.steps for x in step.flatten())

    def __str__(self):
        return " > ".join(str(step) for step in self.steps)
