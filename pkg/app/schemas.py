from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models import Arrow, ExtDimVector, ExtensionData, Quiver
from app.semiinv import BlockDetSI

# --- Config document (the --quiver file) ---

class ArrowConfig(BaseModel):
    """An arrow of the base quiver."""
    name: str = Field(..., min_length=1, description="Unique arrow name")
    source: str = Field(..., description="Source vertex")
    target: str = Field(..., description="Target vertex")

class QuiverConfig(BaseModel):
    vertices: List[str] = Field(..., min_length=1, description="Vertex identifiers; fixes the order of every dimension vector")
    arrows: List[ArrowConfig] = Field(default_factory=list)

class ExtensionConfig(BaseModel):
    """The module T defining the one-point extension."""
    t: List[int] = Field(..., description="Dimension vector of T in vertex order")
    matrices: Optional[Dict[str, List[List[int]]]] = Field(None, description="Arrow -> integer matrix of shape t(target) x t(source)")
    assume_rigid: bool = Field(False, description="Assert Ext(T,T) = 0 without verification")
    assume_end_trivial: bool = Field(False, description="Assert End(T) = k")

class BudgetConfig(BaseModel):
    max_enumeration: Optional[int] = Field(None, ge=1, description="Maximum number of candidate points per enumeration")

class SemiInvariantConfig(BaseModel):
    """A user-supplied determinantal semi-invariant."""
    name: str
    dim: str = Field(..., description="Dimension type in the form s:d1,d2,...")
    letters: Dict[str, str] = Field(..., description="Letter -> arrow of the extended quiver (an arrow of Q or rho<l>_<vertex>)")
    grid: List[List[str]] = Field(..., min_length=1, description="Block grid of matrix expressions")
    sign: int = Field(1, description="+1 or -1")

class QmodConfig(BaseModel):
    """
    The JSON configuration document. Every dimension vector in it is written
    in the vertex order of `quiver.vertices`.
    """
    model_config = ConfigDict(extra="forbid")

    quiver: QuiverConfig
    extension: ExtensionConfig
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    seed: Optional[int] = Field(None, description="Seed for randomized probes")
    gamma_overrides: Dict[str, bool] = Field(default_factory=dict, description="Pinned gamma answers keyed by s:d1,d2,...")
    semi_invariants: List[SemiInvariantConfig] = Field(default_factory=list)
    rep_full_table: Dict[str, str] = Field(default_factory=dict, description="Classes of Rep^full keyed by s:d1,d2,...")

    @model_validator(mode="after")
    def _check_vectors(self) -> "QmodConfig":
        vertices = self.quiver.vertices
        if len(self.extension.t) != len(vertices):
            raise ValueError(f"extension.t has {len(self.extension.t)} entries for {len(vertices)} vertices")
        for key in list(self.gamma_overrides) + list(self.rep_full_table) + [si.dim for si in self.semi_invariants]:
            ExtDimVector.parse(key, vertices)
        return self

    def to_quiver(self) -> Quiver:
        arrows = tuple(Arrow(name=a.name, source=a.source, target=a.target) for a in self.quiver.arrows)
        return Quiver(vertices=tuple(self.quiver.vertices), arrows=arrows)

    def to_extension(self) -> ExtensionData:
        quiver = self.to_quiver()
        matrices = None
        if self.extension.matrices is not None:
            matrices = {name: tuple(tuple(row) for row in grid) for name, grid in self.extension.matrices.items()}
        return ExtensionData(
            quiver=quiver,
            t=quiver.dim_vector(self.extension.t),
            t_matrices=matrices,
            assume_rigid=self.extension.assume_rigid,
            assume_end_trivial=self.extension.assume_end_trivial,
        )

    def parse_dim(self, text: str) -> ExtDimVector:
        return ExtDimVector.parse(text, self.quiver.vertices)

    def gamma_table(self) -> Dict[ExtDimVector, bool]:
        return {self.parse_dim(key): value for key, value in self.gamma_overrides.items()}

    def block_semi_invariants(self) -> Dict[str, BlockDetSI]:
        return {si.name: BlockDetSI(name=si.name, v=self.parse_dim(si.dim), letters=si.letters,
                                    grid=tuple(tuple(row) for row in si.grid), sign=si.sign)
                for si in self.semi_invariants}

# --- Response schemas (what the CLI prints) ---

class MotiveOut(BaseModel):
    """A motive as text and as coefficient maps."""
    text: str
    numerator: Dict[str, int]
    denominator: Dict[str, int]

class EulerResponse(BaseModel):
    a: str
    b: str
    value: int = Field(..., description="<a, b> over A[T]")

class SlopeResponse(BaseModel):
    dim: str
    slope: str = Field(..., description="Exact slope s/(s+|d|) as p/q")

class DimsResponse(BaseModel):
    dim: str
    dim_rep_q: int
    dim_rep_full: int
    dim_moduli: int

class HNTypeOut(BaseModel):
    hn_type: str
    codim: int = Field(..., description="Codimension of the stratum in Rep^full")
    exponent: int = Field(..., description="Exponent of L in the stratum class")

class HNTypesResponse(BaseModel):
    dim: str
    types: List[HNTypeOut]

class SemistableResponse(BaseModel):
    dim: str
    semistable: bool
    stable_equals_semistable: Optional[bool] = Field(None, description="Only decided for semistable types")

class MotiveResponse(BaseModel):
    dim: str
    kind: str = Field(..., description="rep-full or sst")
    source: str
    motive: MotiveOut

class PoincareResponse(BaseModel):
    dim: str
    polynomial: str
    betti: Dict[str, int] = Field(..., description="Exponent of L -> Betti number b_{2i}")

class CountResponse(BaseModel):
    dim: str
    prime: int
    count: int
    predicted: Optional[str] = Field(None, description="Symbolic prediction at L = prime, when available")

class StratumOut(BaseModel):
    hn_type: str
    count: int
    predicted: str
    matches: bool

class CensusResponse(BaseModel):
    dim: str
    prime: int
    total: int
    predicted_total: str
    strata: List[StratumOut]
    passed: bool

class CheckResult(BaseModel):
    name: str
    passed: bool
    skipped: bool = Field(False, description="The check does not apply to this config")
    detail: str = ""

class CheckResponse(BaseModel):
    results: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

class SemiInvariantValue(BaseModel):
    name: str
    value: int
    weights: Optional[Dict[str, int]] = None

class SIEvalResponse(BaseModel):
    dim: str
    prime: int
    seed: int
    values: List[SemiInvariantValue]
    quotient: Optional[List[int]] = Field(None, description="Normalized quotient coordinates at the sampled point")