import itertools

import pytest
from faker import Faker

from app.checks import dimension_types
from app.exceptions import GammaOracleError, NotSemistableError, RigidityNotAssertedError, ZeroDimensionError
from app.models import ExtDimVector, ExtensionData
from app.stability import (GammaAnswer, GammaOracle, TableGammaOracle, enumerate_hn_types, gamma_bound_holds,
                           hn_exponent, hn_stratum_codim, is_semistable_type, stable_equals_semistable)

fake = Faker()

class WitnesslessOracle(GammaOracle):
    """Claims gamma = d everywhere and never says why."""

    @property
    def token(self) -> str:
        return "witnessless"

    def _answer(self, ext, v):
        return GammaAnswer(full=True)

# --- HN types of the running example ---

def test_hn_types_of_running_example(running_ext: ExtensionData, symbolic_gamma):
    v = running_ext.ext_vector(2, [4, 1])
    types = enumerate_hn_types(running_ext, v, symbolic_gamma)
    assert [str(hn) for hn in types] == [
        "(1|1,0) > (1|3,1)",
        "(1|1,1) > (1|3,0)",
        "(1|2,0) > (1|2,1)",
    ]
    assert [hn_stratum_codim(running_ext, hn) for hn in types] == [4, 5, 1]
    assert [hn_exponent(running_ext, hn) for hn in types] == [3, 4, 6]
    assert all(hn.weight == v for hn in types)

def test_hn_types_have_semistable_steps(running_ext: ExtensionData, symbolic_gamma):
    v = running_ext.ext_vector(3, [6, 2])
    types = enumerate_hn_types(running_ext, v, symbolic_gamma)
    assert types
    for hn in types:
        assert hn.length >= 2
        assert all(step.s >= 1 for step in hn.steps)
        assert all(is_semistable_type(running_ext, step, symbolic_gamma) for step in hn.steps)

def hn_types_by_definition(ext: ExtensionData, v: ExtDimVector, g) -> set:
    """Every split of v into two or more nonzero semistable parts of strictly decreasing slope."""
    found = set()

    def split(prefix, remaining):
        if remaining.is_zero:
            if len(prefix) >= 2 and all(is_semistable_type(ext, step, g) for step in prefix):
                found.add(tuple(prefix))
            return
        ranges = [range(remaining.s + 1)] + [range(x + 1) for x in remaining.d.dims]
        for entries in itertools.product(*ranges):
            step = ext.ext_vector(entries[0], entries[1:])
            if step.is_zero or (prefix and step.slope >= prefix[-1].slope):
                continue
            split(prefix + [step], remaining - step)

    split([], v)
    return found

def test_hn_types_match_the_definition(running_ext: ExtensionData, symbolic_gamma):
    weights = dimension_types(running_ext, max_s=2, max_total=5) + [running_ext.ext_vector(3, [6, 2])]
    for v in weights:
        enumerated = {hn.steps for hn in enumerate_hn_types(running_ext, v, symbolic_gamma)}
        assert enumerated == hn_types_by_definition(running_ext, v, symbolic_gamma), v

def test_single_step_weight_has_no_hn_types(running_ext: ExtensionData, symbolic_gamma):
    v = running_ext.ext_vector(1, [fake.random_int(0, 3), fake.random_int(0, 1)])
    assert enumerate_hn_types(running_ext, v, symbolic_gamma) == []

# --- Semistability ---

@pytest.mark.parametrize("s, d, expected", [
    (1, [0, 0], True),
    (1, [1, 0], True),
    (1, [1, 1], True),
    (2, [4, 1], True),
    (3, [6, 2], True),
    (1, [4, 0], False),
    (0, [3, 1], False),
])
def test_semistable_types(running_ext: ExtensionData, symbolic_gamma, s, d, expected):
    assert is_semistable_type(running_ext, running_ext.ext_vector(s, d), symbolic_gamma) is expected

def test_gamma_bound(running_ext: ExtensionData):
    assert gamma_bound_holds(running_ext, running_ext.ext_vector(2, [6, 2]))
    assert not gamma_bound_holds(running_ext, running_ext.ext_vector(2, [7, 0]))

def test_zero_type_is_rejected(running_ext: ExtensionData, symbolic_gamma):
    zero = running_ext.ext_vector(0, [0, 0])
    with pytest.raises(ZeroDimensionError):
        is_semistable_type(running_ext, zero, symbolic_gamma)
    with pytest.raises(ZeroDimensionError):
        enumerate_hn_types(running_ext, zero, symbolic_gamma)

def test_rigidity_is_required(running_ext: ExtensionData, symbolic_gamma):
    loose = running_ext.model_copy(update={"assume_rigid": False})
    with pytest.raises(RigidityNotAssertedError):
        is_semistable_type(loose, loose.ext_vector(2, [4, 1]), symbolic_gamma)
    verified = loose.model_copy(update={"rigidity_verified": True})
    assert is_semistable_type(verified, verified.ext_vector(2, [4, 1]), symbolic_gamma)

def test_stable_equals_semistable(running_ext: ExtensionData, symbolic_gamma):
    assert stable_equals_semistable(running_ext, running_ext.ext_vector(2, [4, 1]), symbolic_gamma)
    assert not stable_equals_semistable(running_ext, running_ext.ext_vector(2, [2, 0]), symbolic_gamma)
    with pytest.raises(NotSemistableError):
        stable_equals_semistable(running_ext, running_ext.ext_vector(1, [4, 0]), symbolic_gamma)

# --- Gamma oracles ---

def test_probe_agrees_with_symbolic_oracle(running_ext: ExtensionData, symbolic_gamma, probe_gamma):
    """
    Positive probe answers are certain and at p = 101 the probe finds every
    surjection the exact engine reports.
    """
    for v in dimension_types(running_ext, max_s=2, max_total=5):
        exact = symbolic_gamma.is_full_rank(running_ext, v)
        probed = probe_gamma.is_full_rank(running_ext, v)
        assert probed.full == exact.full, v
        if probed.full:
            assert probed.witness.source == "probe"
            assert probed.witness.prime == 101

def test_table_oracle_pins_answers(running_ext: ExtensionData, symbolic_gamma):
    pinned = running_ext.ext_vector(1, [1, 0])
    table = TableGammaOracle({pinned: False}, fallback=symbolic_gamma)
    assert not table.is_full_rank(running_ext, pinned).full
    assert not is_semistable_type(running_ext, pinned, table)
    other = running_ext.ext_vector(1, [1, 1])
    assert table.is_full_rank(running_ext, other).full
    assert "1:1,0=0" in table.token and symbolic_gamma.token in table.token

def test_table_oracle_without_fallback(running_ext: ExtensionData):
    pinned = running_ext.ext_vector(1, [1, 0])
    table = TableGammaOracle({pinned: True})
    answer = table.is_full_rank(running_ext, pinned)
    assert answer.full and answer.witness.source == "table"
    with pytest.raises(GammaOracleError):
        table.is_full_rank(running_ext, running_ext.ext_vector(1, [2, 0]))

def test_positive_answer_needs_a_witness(running_ext: ExtensionData):
    with pytest.raises(GammaOracleError):
        WitnesslessOracle().is_full_rank(running_ext, running_ext.ext_vector(1, [1, 0]))

def test_oracle_answers_are_memoized(running_ext: ExtensionData, symbolic_gamma):
    v = running_ext.ext_vector(2, [3, 1])
    first = symbolic_gamma.is_full_rank(running_ext, v)
    assert symbolic_gamma.is_full_rank(running_ext, v) is first
