"""
Randomized and exact homological probes over F_p.

Every randomized probe takes an explicit seed; the i-th trial draws from
np.random.default_rng(seed + i) so a positive answer can be replayed from
its witness alone.
"""
import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.core import dim_rep_q, euler_form_ext, euler_form_q
from app.exceptions import ExplicitModuleRequiredError
from app.models import DimVector, ExtDimVector, ExtensionData
from app.oracle.representations import (FqRep, QRep, hom_dim, hom_space_ext, kernel_rep,
                                        random_point, tensor_arrow, tensor_rep)
from app.stability import GammaAnswer, GammaOracle, GammaWitness

logger = logging.getLogger(__name__)


class GammaEstimate(BaseModel):
    rank: DimVector = Field(..., description="Componentwise best rank of f over all trials")
    full: bool = Field(..., description="Some trial produced a surjective f")
    witness: Optional[GammaWitness] = None


def estimate_gamma(ext: ExtensionData, v: ExtDimVector, trials: int, p: int, seed: int) -> GammaEstimate:
    """
    Lower bound for gamma_{T^s,d} from random pairs (M, f). A surjective
    sample proves gamma = d; otherwise the answer is only "probably not".
    """
    if ext.t_matrices is None:
        raise ExplicitModuleRequiredError()
    if v.d.is_zero:
        return GammaEstimate(rank=v.d, full=True, witness=GammaWitness(source="probe", prime=p, seed=seed))
    best = [0] * len(v.d.dims)
    for trial in range(trials):
        point = random_point(ext, v, p, np.random.default_rng(seed + trial))
        ranks = point.image_dims()
        if ranks == v.d:
            logger.debug("gamma = d for %s at trial %d", v, trial)
            return GammaEstimate(rank=v.d, full=True, witness=GammaWitness(source="probe", prime=p, seed=seed + trial))
        best = [max(a, b) for a, b in zip(best, ranks.dims)]
    rank = ext.vector(best)
    logger.warning("gamma for %s is probably not full: best rank %s after %d trials over F_%d", v, rank, trials, p)
    return GammaEstimate(rank=rank, full=False)


class ProbeGammaOracle(GammaOracle):
    """Answers the gamma question by estimate_gamma; positive answers are certain."""

    def __init__(self, prime: int = 101, trials: int = 8, seed: int = 0):
        self.prime = prime
        self.trials = trials
        self.seed = seed
        super().__init__()

    @property
    def token(self) -> str:
        return f"probe[p={self.prime},trials={self.trials},seed={self.seed}]"

    def _answer(self, ext: ExtensionData, v: ExtDimVector) -> GammaAnswer:
        estimate = estimate_gamma(ext, v, self.trials, self.prime, self.seed)
        return GammaAnswer(full=estimate.full, rank=estimate.rank, witness=estimate.witness)


def rigidity_check(ext: ExtensionData, p: int) -> bool:
    """Ext_A(T,T) = hom(T,T) - <t,t>_Q = 0."""
    t_rep = tensor_rep(ext, p)
    value = hom_dim(t_rep, t_rep) - euler_form_q(ext.quiver, ext.t, ext.t)
    logger.info("dim Ext(T,T) over F_%d: %d", p, value)
    return value == 0


def end_trivial_check(ext: ExtensionData, p: int) -> bool:
    t_rep = tensor_rep(ext, p)
    return hom_dim(t_rep, t_rep) == 1


def ext2_dim(ext: ExtensionData, rep_m: FqRep, rep_n: FqRep) -> int:
    """dim Ext^2_{A[T]}(M, N) = dim Ext_A(ker f_M, N)."""
    kernel = kernel_rep(ext, rep_m)
    return hom_dim(kernel, rep_n.base) - euler_form_q(ext.quiver, kernel.dims, rep_n.base.dims)


def tangent_dim(ext: ExtensionData, rep: FqRep) -> int:
    """dim Rep_d(Q) + s<t,d>_Q + dim Ext_A(ker f, M)."""
    kernel = kernel_rep(ext, rep)
    d = rep.base.dims
    ext_term = hom_dim(kernel, rep.base) - euler_form_q(ext.quiver, kernel.dims, d)
    return dim_rep_q(ext.quiver, d) + rep.s * euler_form_q(ext.quiver, ext.t, d) + ext_term


def ambient_dim(ext: ExtensionData, v: ExtDimVector) -> int:
    """Number of coordinates of Rep_(s,d)(Q-hat): the arrows of Q plus every rho block."""
    return dim_rep_q(ext.quiver, v.d) + v.s * sum(a * b for a, b in zip(ext.t.dims, v.d.dims))


def jacobian(ext: ExtensionData, rep: FqRep) -> np.ndarray:
    """
    Jacobian of the relations M_a f_i - f_j kron(T_a, I_s) at the point,
    in the coordinates (M_a)_a followed by (f_i)_i, row-major.
    """
    q, s, d = ext.quiver, rep.s, rep.base.dims
    offsets, offset = {}, 0
    for arrow in q.arrows:
        offsets[arrow.name] = offset
        offset += d[arrow.target] * d[arrow.source]
    for vertex in q.vertices:
        offsets[vertex] = offset
        offset += d[vertex] * ext.t[vertex] * s
    rows = []
    for arrow in q.arrows:
        i, j = arrow.source, arrow.target
        width_i = ext.t[i] * s
        if d[j] * width_i == 0:
            continue
        block = np.zeros((d[j] * width_i, offset), dtype=np.int64)
        m_start = offsets[arrow.name]
        block[:, m_start:m_start + d[j] * d[i]] += np.kron(np.eye(d[j], dtype=np.int64), rep.f[i].T)
        block[:, offsets[i]:offsets[i] + d[i] * width_i] += np.kron(rep.base.matrices[arrow.name],
                                                                      np.eye(width_i, dtype=np.int64))
        tensor = tensor_arrow(ext, arrow.name, s, rep.p)
        block[:, offsets[j]:offsets[j] + d[j] * ext.t[j] * s] -= np.kron(np.eye(d[j], dtype=np.int64), tensor.T)
        rows.append(block % rep.p)
    if not rows:
        return np.zeros((0, offset), dtype=np.int64)
    return np.vstack(rows)


def jacobian_check(ext: ExtensionData, rep: FqRep) -> bool:
    """Ambient dimension minus Jacobian rank agrees with tangent_dim."""
    from_jacobian = ambient_dim(ext, rep.dim) - rep.field.rank(jacobian(ext, rep))
    expected = tangent_dim(ext, rep)
    if from_jacobian != expected:
        logger.warning("tangent space at a point of %s: jacobian gives %d, formula %d", rep.dim, from_jacobian, expected)
    return from_jacobian == expected


class HomFormulaReport(BaseModel):
    d: DimVector
    hom: int = Field(..., description="dim Hom(T^s, M) for generic M")
    euler: int = Field(..., description="<s*t, d>_Q")
    ext_term: int = Field(..., description="dim Ext_A(ker f, M) for generic f")
    gamma: DimVector = Field(..., description="Rank of the generic f")
    kernel_hom: int = Field(..., description="dim Hom_A(ker f, M) for generic f")
    passed: bool


def hom_formula_check(ext: ExtensionData, v: ExtDimVector, p: int, trials: int, seed: int,
                      maps_per_module: int = 4) -> HomFormulaReport:
    """
    Checks hom(T^s, d) = <s*t, d> + ext(ker f, M) and
    hom(T^s, d) = <gamma, d> + hom(ker f, M) on generic samples. Genericity
    is approximated by keeping the modules of minimal hom and, per module,
    the map of maximal rank and then minimal ext term.
    """
    source = tensor_rep(ext, p, v.s)
    samples = []
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        base = QRep.random(ext.quiver, v.d, p, rng)
        samples.append((hom_dim(source, base), base, rng))
    minimal = min(hom for hom, _, _ in samples)
    best = None
    for hom, base, rng in samples:
        if hom != minimal:
            continue
        for _ in range(maps_per_module):
            point = random_point(ext, v, p, rng, base=base)
            kernel = kernel_rep(ext, point)
            kernel_hom = hom_dim(kernel, base)
            ext_term = kernel_hom - euler_form_q(ext.quiver, kernel.dims, v.d)
            key = (-point.image_dims().total, ext_term)
            if best is None or key < best[0]:
                best = (key, point.image_dims(), ext_term, kernel_hom)
    _, gamma, ext_term, kernel_hom = best
    euler = euler_form_q(ext.quiver, source.dims, v.d)
    passed = minimal == euler + ext_term and minimal == euler_form_q(ext.quiver, gamma, v.d) + kernel_hom
    if not passed:
        logger.warning("hom formula fails for %s: hom %d, <st,d> %d, ext %d", v, minimal, euler, ext_term)
    return HomFormulaReport(d=v.d, hom=minimal, euler=euler, ext_term=ext_term, gamma=gamma,
                            kernel_hom=kernel_hom, passed=passed)


class EulerIdentityReport(BaseModel):
    hom: int
    ext1: int = Field(..., description="Inferred from the identity, must be nonnegative")
    ext2: int
    euler: int
    passed: bool


def euler_identity_check(ext: ExtensionData, rep_m: FqRep, rep_n: FqRep) -> EulerIdentityReport:
    """hom - ext1 + ext2 = <dim M, dim N> over A[T]; ext1 is inferred and checked to be >= 0."""
    hom = hom_space_ext(ext, rep_m, rep_n).dim
    ext2 = ext2_dim(ext, rep_m, rep_n)
    euler = euler_form_ext(ext, rep_m.dim, rep_n.dim)
    ext1 = hom + ext2 - euler
    return EulerIdentityReport(hom=hom, ext1=ext1, ext2=ext2, euler=euler, passed=ext1 >= 0)


def sample_points(ext: ExtensionData, v: ExtDimVector, p: int, count: int, seed: int,
                  full_only: bool = True, attempts: int = 64) -> List[FqRep]:
    """Deterministic stream of random points of dimension v, optionally full ones only."""
    points: List[FqRep] = []
    rng = np.random.default_rng(seed)
    for _ in range(count * attempts):
        if len(points) == count:
            break
        point = random_point(ext, v, p, rng)
        if point.is_full or not full_only:
            points.append(point)
    return points
