import logging
from functools import cached_property
from typing import Dict, List, Optional, Union

from app.core import euler_form_ext, expected_dims
from app.crud.config_repository import ConfigRepository
from app.exceptions import ConfigError, DegenerateQuotientError, InterpolationError, UnsupportedEngineError
from app.grothendieck import MotiveExpr
from app.models import ExtDimVector, ExtensionData, HNType
from app.motive import (A2GammaOracle, InterpolatedSource, SymbolicA2Source, UserTableSource,
                        motive_rep_full, motive_sst, poincare_polynomial)
from app.oracle.census import count_rep_full_points
from app.oracle.probes import ProbeGammaOracle, end_trivial_check, rigidity_check, sample_points
from app.oracle.strata import stratum_census
from app.schemas import (CensusResponse, CountResponse, DimsResponse, EulerResponse, HNTypeOut,
                         HNTypesResponse, MotiveOut, MotiveResponse, PoincareResponse, QmodConfig,
                         SemiInvariantValue, SemistableResponse, SIEvalResponse, SlopeResponse, StratumOut)
from app.semiinv import BlockDetSI, builtin_semi_invariants, evaluate_si, quotient_coords, verify_weight
from app.stability import (GammaOracle, TableGammaOracle, enumerate_hn_types, hn_exponent, hn_stratum_codim,
                           is_semistable_type, stable_equals_semistable)
from config import Settings, settings as default_settings

logger = logging.getLogger(__name__)

Source = Union[SymbolicA2Source, InterpolatedSource, UserTableSource]

def motive_out(value: MotiveExpr) -> MotiveOut:
    data = value.to_json()
    return MotiveOut(text=str(value), numerator=data["numerator"], denominator=data["denominator"])

def supports_symbolic(ext: ExtensionData) -> bool:
    q = ext.quiver
    return len(q.vertices) == 2 and len(q.arrows) == 1 and q.arrows[0].source != q.arrows[0].target

class ModuliService:
    """
    Handles the computations behind every CLI command for one config.
    """
    def __init__(self, config: Optional[QmodConfig] = None, settings: Settings = default_settings,
                 seed: Optional[int] = None, repository: Optional[ConfigRepository] = None):
        self.config = config
        self.settings = settings
        self.repository = repository or ConfigRepository()
        self._seed = seed

    @classmethod
    def from_path(cls, path: Optional[str], settings: Settings = default_settings,
                  seed: Optional[int] = None) -> "ModuliService":
        repository = ConfigRepository(path)
        config = repository.load() if path else None
        return cls(config, settings=settings, seed=seed, repository=repository)

    # --- Resolved settings ---

    @property
    def seed(self) -> int:
        if self._seed is not None:
            return self._seed
        if self.config is not None and self.config.seed is not None:
            return self.config.seed
        return self.settings.SEED

    @property
    def budget(self) -> int:
        # Business Rule: QMOD_BUDGET beats the config file, which beats the default
        if self.settings.budget_is_pinned():
            return self.settings.BUDGET
        if self.config is not None and self.config.budgets.max_enumeration is not None:
            return self.config.budgets.max_enumeration
        return self.settings.BUDGET

    def _require_config(self) -> QmodConfig:
        if self.config is None:
            raise ConfigError("this command needs a config file: pass --quiver")
        return self.config

    @cached_property
    def ext(self) -> ExtensionData:
        ext = self._require_config().to_extension()
        # Business Rule: an unasserted T is accepted once the oracle shows Ext(T,T) = 0
        if not ext.assume_rigid and ext.t_matrices is not None:
            if rigidity_check(ext, self.settings.PROBE_PRIME):
                logger.info("rigidity of T verified over F_%d", self.settings.PROBE_PRIME)
                ext = ext.model_copy(update={"rigidity_verified": True})
            else:
                logger.warning("T is not rigid; stability commands will refuse to run")
        if ext.assume_end_trivial and ext.t_matrices is not None:
            if not end_trivial_check(ext, self.settings.PROBE_PRIME):
                logger.warning("End(T) is larger than k over F_%d although assume_end_trivial is set",
                               self.settings.PROBE_PRIME)
        return ext

    @cached_property
    def gamma(self) -> GammaOracle:
        if supports_symbolic(self.ext):
            oracle: GammaOracle = A2GammaOracle()
        else:
            oracle = ProbeGammaOracle(self.settings.PROBE_PRIME, self.settings.PROBE_TRIALS, self.seed)
        overrides = self.config.gamma_table()
        if overrides:
            oracle = TableGammaOracle(overrides, fallback=oracle)
        logger.info("gamma oracle: %s", oracle.token)
        return oracle

    def source(self, user_table: Optional[str] = None, interpolate: bool = False) -> Source:
        """
        Rep^full source in order of preference: a table file, interpolation,
        the config's own table, the symbolic engine.
        """
        if user_table is not None:
            table = dict(self.config.rep_full_table if self.config else {})
            table.update(self.repository.load_table(user_table))
            return UserTableSource(table=table)
        if interpolate:
            return InterpolatedSource(budget=self.budget)
        if self.config is not None and self.config.rep_full_table:
            return UserTableSource(table=self.config.rep_full_table)
        return SymbolicA2Source()

    def parse_dim(self, text: str) -> ExtDimVector:
        if self.config is not None:
            return self.config.parse_dim(text)
        # Without a quiver, vertices are numbered by position
        _, _, tail = text.partition(":")
        count = len(tail.split(",")) if tail.strip() else 0
        return ExtDimVector.parse(text, [str(k) for k in range(1, count + 1)])

    # --- Commands ---

    def euler(self, a: str, b: str) -> EulerResponse:
        v, w = self.parse_dim(a), self.parse_dim(b)
        return EulerResponse(a=v.cli_form(), b=w.cli_form(), value=euler_form_ext(self.ext, v, w))

    def slope(self, dim: str) -> SlopeResponse:
        v = self.parse_dim(dim)
        value = v.slope
        return SlopeResponse(dim=v.cli_form(), slope=f"{value.numerator}/{value.denominator}")

    def dims(self, dim: str) -> DimsResponse:
        v = self.parse_dim(dim)
        dims = expected_dims(self.ext, v)
        return DimsResponse(dim=v.cli_form(), dim_rep_q=dims.dim_rep_q, dim_rep_full=dims.dim_rep_full,
                            dim_moduli=dims.dim_moduli)

    def hn_types(self, dim: str) -> HNTypesResponse:
        v = self.parse_dim(dim)
        types = [HNTypeOut(hn_type=str(hn), codim=hn_stratum_codim(self.ext, hn), exponent=hn_exponent(self.ext, hn))
                 for hn in enumerate_hn_types(self.ext, v, self.gamma)]
        return HNTypesResponse(dim=v.cli_form(), types=types)

    def codim(self, dim: str, steps: Optional[List[str]] = None) -> HNTypesResponse:
        """Codimensions of all HN strata of `dim`, or of the single type given by `steps`."""
        if not steps:
            return self.hn_types(dim)
        v = self.parse_dim(dim)
        hn = HNType(steps=tuple(self.parse_dim(step) for step in steps))
        if hn.weight != v:
            raise ConfigError(f"the steps of {hn} add up to {hn.weight}, not {v}")
        out = HNTypeOut(hn_type=str(hn), codim=hn_stratum_codim(self.ext, hn), exponent=hn_exponent(self.ext, hn))
        return HNTypesResponse(dim=v.cli_form(), types=[out])

    def semistable(self, dim: str) -> SemistableResponse:
        v = self.parse_dim(dim)
        semistable = is_semistable_type(self.ext, v, self.gamma)
        coincide = stable_equals_semistable(self.ext, v, self.gamma) if semistable else None
        return SemistableResponse(dim=v.cli_form(), semistable=semistable, stable_equals_semistable=coincide)

    def motive(self, dim: str, kind: str = "sst", user_table: Optional[str] = None,
               interpolate: bool = False) -> MotiveResponse:
        v = self.parse_dim(dim)
        src = self.source(user_table, interpolate)
        if kind == "rep-full":
            value = motive_rep_full(self.ext, v, src)
        else:
            value = motive_sst(self.ext, v, src, self.gamma)
        return MotiveResponse(dim=v.cli_form(), kind=kind, source=src.token, motive=motive_out(value))

    def poincare(self, dim: str, user_table: Optional[str] = None, interpolate: bool = False) -> PoincareResponse:
        v = self.parse_dim(dim)
        poly = poincare_polynomial(self.ext, v, self.source(user_table, interpolate), self.gamma)
        betti = {str(k): c for k, c in sorted(poly.coefficients.items())}
        return PoincareResponse(dim=v.cli_form(), polynomial=str(poly), betti=betti)

    def count(self, dim: str, prime: int) -> CountResponse:
        v = self.parse_dim(dim)
        total = count_rep_full_points(self.ext, v, prime, self.budget)
        predicted = None
        try:
            value = motive_rep_full(self.ext, v, self.source()).eval_at(prime)
            predicted = str(value)
        except (UnsupportedEngineError, InterpolationError) as e:
            logger.info("no symbolic prediction for %s: %s", v, e.detail)
        return CountResponse(dim=v.cli_form(), prime=prime, count=total, predicted=predicted)

    def census(self, dim: str, prime: int, user_table: Optional[str] = None) -> CensusResponse:
        v = self.parse_dim(dim)
        report = stratum_census(self.ext, v, prime, self.source(user_table), self.gamma, self.budget)
        logger.info("census of %s over F_%d: %d full points", v, prime, report.total)
        strata = [StratumOut(hn_type=str(entry.hn_type), count=entry.count, predicted=str(entry.predicted),
                             matches=entry.matches) for entry in report.strata]
        return CensusResponse(dim=v.cli_form(), prime=prime, total=report.total,
                              predicted_total=str(report.predicted_total), strata=strata, passed=report.passed)

    def semi_invariants(self, v: ExtDimVector) -> Dict[str, BlockDetSI]:
        """Configured semi-invariants of type v, falling back to the built-in families."""
        configured = {name: si for name, si in self._require_config().block_semi_invariants().items() if si.v == v}
        return configured or builtin_semi_invariants(self.ext, v)

    def si_eval(self, dim: str, prime: int, weights: bool = False) -> SIEvalResponse:
        v = self.parse_dim(dim)
        sis = self.semi_invariants(v)
        points = sample_points(self.ext, v, prime, 1, self.seed)
        if not points:
            raise UnsupportedEngineError(f"no full point of {v} found over F_{prime}")
        point = points[0]
        values = []
        for name in sorted(sis):
            si: BlockDetSI = sis[name]
            fitted = verify_weight(self.ext, si, prime, self.settings.PROBE_TRIALS, self.seed).weights if weights else None
            values.append(SemiInvariantValue(name=name, value=evaluate_si(si, point), weights=fitted))
        quotient = None
        if "h0" in sis:
            try:
                quotient = list(quotient_coords(self.ext, point))
            except (DegenerateQuotientError, UnsupportedEngineError) as e:
                logger.info("no quotient point for the sample: %s", e.detail)
        return SIEvalResponse(dim=v.cli_form(), prime=prime, seed=self.seed, values=values, quotient=quotient)
