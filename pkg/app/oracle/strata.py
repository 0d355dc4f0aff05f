"""Exhaustive stratum censuses checked against the predicted motivic classes."""
import logging
from fractions import Fraction
from typing import List

from pydantic import BaseModel, Field

from app.models import ExtDimVector, ExtensionData, HNType
from app.motive import hn_stratum_class, motive_rep_full, motive_sst
from app.oracle.census import stratum_counts
from app.stability import GammaOracle, enumerate_hn_types

logger = logging.getLogger(__name__)


class StratumEntry(BaseModel):
    hn_type: HNType
    count: int = Field(..., description="Points of this HN type over F_p")
    predicted: Fraction = Field(..., description="Predicted class evaluated at L = p")

    @property
    def matches(self) -> bool:
        return self.predicted == self.count


class CensusReport(BaseModel):
    v: ExtDimVector
    p: int
    total: int = Field(..., description="|Rep^full(F_p)|")
    predicted_total: Fraction
    strata: List[StratumEntry]

    @property
    def semistable(self) -> StratumEntry:
        return next(entry for entry in self.strata if entry.hn_type.length == 1)

    @property
    def passed(self) -> bool:
        return self.total == self.predicted_total and all(entry.matches for entry in self.strata)


def stratum_census(ext: ExtensionData, v: ExtDimVector, p: int, src, g: GammaOracle,
                   budget: int = 10**8) -> CensusReport:
    """
    Partitions Rep^full(F_p) by the HN type of every point and compares each
    stratum with its predicted class at L = p. Expected strata that are empty
    over F_p are listed with count 0; unexpected types are predicted 0.
    """
    counts = stratum_counts(ext, v, p, budget)
    semistable = HNType(steps=(v,))
    expected = {semistable: motive_sst(ext, v, src, g)}
    for hn in enumerate_hn_types(ext, v, g):
        expected[hn] = hn_stratum_class(ext, hn, src, g)
    strata = []
    for hn in sorted(set(expected) | set(counts), key=lambda item: (item.length, item.flatten())):
        predicted = expected[hn].eval_at(p) if hn in expected else Fraction(0)
        entry = StratumEntry(hn_type=hn, count=counts.get(hn, 0), predicted=predicted)
        if not entry.matches:
            logger.warning("stratum %s over F_%d: counted %d, predicted %s", hn, p, entry.count, predicted)
        strata.append(entry)
    report = CensusReport(v=v, p=p, total=sum(counts.values()),
                          predicted_total=motive_rep_full(ext, v, src).eval_at(p), strata=strata)
    logger.info("census %s over F_%d: %s", v, p, "passed" if report.passed else "FAILED")
    return report
