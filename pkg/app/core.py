"""
Quiver and dimension-vector arithmetic for one-point extensions.
"""
import logging
from fractions import Fraction

from pydantic import BaseModel, Field

from app.exceptions import DimensionMismatchError, ExplicitModuleRequiredError, ZeroDimensionError
from app.models import (INFINITY, Arrow, DimVector, ExtDimVector, ExtendedQuiver, ExtensionData, Quiver,
                        Relation)

logger = logging.getLogger(__name__)


class ExpectedDims(BaseModel):
    """Dimensions predicted by the geometry of Rep^full and the moduli space."""
    dim_rep_q: int = Field(..., description="dim Rep_d(Q)")
    dim_rep_full: int = Field(..., description="dim Rep_d(Q) + s<t,d>_Q")
    dim_moduli: int = Field(..., description="1 - <v,v> in A[T]")


def rho_name(l: int, vertex: str) -> str:
    """Name of the l-th arrow inf -> vertex (1-based, standard basis of T_vertex)."""
    return f"rho{l}_{vertex}"


def build_extended_quiver(ext: ExtensionData) -> ExtendedQuiver:
    """
    Builds Q-hat and its relations. For every arrow a: i -> j of Q and every
    basis vector e_l of T_i the relation reads
        a * rho_{l,(i)} = sum_s T_a[s, l] * rho_{s,(j)}.
    """
    if ext.t_matrices is None:
        raise ExplicitModuleRequiredError()
    q = ext.quiver
    rho_arrows = {v: tuple(rho_name(l, v) for l in range(1, ext.t[v] + 1)) for v in q.vertices}
    arrows = list(q.arrows)
    for vertex in q.vertices:
        arrows.extend(Arrow(name=name, source=INFINITY, target=vertex) for name in rho_arrows[vertex])
    extended = Quiver(vertices=(INFINITY,) + q.vertices, arrows=tuple(arrows))

    relations = []
    for arrow in q.arrows:
        matrix = ext.matrix(arrow.name)
        for l, rho in enumerate(rho_arrows[arrow.source]):
            terms = tuple(
                (rho_arrows[arrow.target][s], matrix[s][l])
                for s in range(ext.t[arrow.target]) if matrix[s][l] != 0
            )
            relations.append(Relation(arrow=arrow.name, rho=rho, terms=terms))
    logger.debug("extended quiver: %d arrows, %d relations", len(arrows), len(relations))
    return ExtendedQuiver(quiver=extended, relations=tuple(relations), rho_arrows=rho_arrows)


def euler_form_q(q: Quiver, d: DimVector, e: DimVector) -> int:
    """<d,e>_Q = sum_i d_i e_i - sum_{a: i->j} d_i e_j."""
    for vector in (d, e):
        if vector.vertices != q.vertices:
            raise DimensionMismatchError(f"{vector} is not over the vertices {list(q.vertices)}")
    value = sum(a * b for a, b in zip(d.dims, e.dims))
    for arrow in q.arrows:
        value -= d[arrow.source] * e[arrow.target]
    return value


def euler_form_ext(ext: ExtensionData, a: ExtDimVector, b: ExtDimVector) -> int:
    """<(s,d),(s',d')> = ss' - s<t,d'>_Q + <d,d'>_Q."""
    q = ext.quiver
    return a.s * b.s - a.s * euler_form_q(q, ext.t, b.d) + euler_form_q(q, a.d, b.d)


def slope(v: ExtDimVector) -> Fraction:
    if v.is_zero:
        raise ZeroDimensionError("slope of the zero vector is undefined")
    return v.slope


def dim_rep_q(q: Quiver, d: DimVector) -> int:
    return sum(d[arrow.source] * d[arrow.target] for arrow in q.arrows)


def expected_dims(ext: ExtensionData, v: ExtDimVector) -> ExpectedDims:
    rep_q = dim_rep_q(ext.quiver, v.d)
    return ExpectedDims(
        dim_rep_q=rep_q,
        dim_rep_full=rep_q + v.s * euler_form_q(ext.quiver, ext.t, v.d),
        dim_moduli=1 - euler_form_ext(ext, v, v),
    )
