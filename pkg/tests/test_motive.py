import pytest
from faker import Faker
from pydantic import ValidationError

from app.exceptions import (HypothesisViolationError, InvariantCheckFailed, NotSemistableError,
                            UnsupportedEngineError)
from app.grothendieck import LPolynomial, MotiveExpr, class_pg
from app.models import Arrow, ExtensionData, Quiver
from app.motive import (A2IsoClass, InterpolatedSource, SymbolicA2Source, UserTableSource, a2_engine,
                        hn_stratum_class, motive_rep_full, motive_sst, poincare_polynomial, poincare_term,
                        source_adapter)
from app.stability import enumerate_hn_types

fake = Faker()

SYMBOLIC = SymbolicA2Source()

def geometric_series(n: int) -> LPolynomial:
    return LPolynomial({k: 1 for k in range(n + 1)})

# --- The symbolic engine for 1 -> 2 ---

def test_a2_engine_reads_off_the_module(running_ext: ExtensionData):
    engine = a2_engine(running_ext)
    assert (engine.p, engine.u, engine.v) == (1, 2, 0)

def test_a2_rep_full_classes(running_ext: ExtensionData):
    engine = a2_engine(running_ext)
    rep_full = engine.rep_full(running_ext.ext_vector(1, [2, 1]))
    assert rep_full == MotiveExpr.parse("L*(L-1)^3*(L+1)^2")
    assert rep_full.eval(2) == 18 and rep_full.eval(3) == 384
    assert rep_full.degree == 6
    assert engine.rep_full(running_ext.ext_vector(1, [1, 0])) == LPolynomial({3: 1, 0: -1})

def test_a2_epimorphism_count(running_ext: ExtensionData):
    epi = a2_engine(running_ext).hom_epi_class(1, A2IsoClass(d1=2, d2=1, r=1))
    assert epi == MotiveExpr.parse("L*(L-1)^2*(L+1)")

def test_a2_iso_class_rank_is_bounded():
    with pytest.raises(ValidationError):
        A2IsoClass(d1=1, d2=2, r=2)

def test_a2_engine_rejects_other_quivers():
    q = Quiver(vertices=("1", "2"), arrows=(Arrow(name="a", source="1", target="2"),
                                            Arrow(name="b", source="1", target="2")))
    ext = ExtensionData(quiver=q, t=q.dim_vector([1, 0]), t_matrices={"a": (), "b": ()}, assume_rigid=True)
    with pytest.raises(UnsupportedEngineError):
        motive_rep_full(ext, ext.ext_vector(1, [1, 0]), SYMBOLIC)

# --- Motives of Rep^sst and the HN recursion ---

def test_hn_strata_add_up_to_rep_full(running_ext: ExtensionData, symbolic_gamma):
    """
    [Rep^full] is the disjoint union of the semistable locus and the HN strata.
    """
    for s, d in [(2, [4, 1]), (3, [6, 2])]:
        v = running_ext.ext_vector(s, d)
        total = motive_sst(running_ext, v, SYMBOLIC, symbolic_gamma)
        for hn in enumerate_hn_types(running_ext, v, symbolic_gamma):
            total = total + hn_stratum_class(running_ext, hn, SYMBOLIC, symbolic_gamma)
        assert total == motive_rep_full(running_ext, v, SYMBOLIC)

def test_poincare_terms_of_running_example(running_ext: ExtensionData, symbolic_gamma):
    v = running_ext.ext_vector(2, [4, 1])
    terms = {poincare_term(running_ext, hn, SYMBOLIC, symbolic_gamma)
             for hn in enumerate_hn_types(running_ext, v, symbolic_gamma)}
    assert terms == {
        MotiveExpr.parse("(L^3-1)*(L^3-L)/(L-1)^4"),
        MotiveExpr.parse("1/(L-1)^2"),
        MotiveExpr.parse("(L^3-1)/(L*(L-1)^3)"),
    }

def test_rep_full_over_pg_of_running_example(running_ext: ExtensionData):
    v = running_ext.ext_vector(2, [4, 1])
    expected = MotiveExpr.parse("L^2*(L^4-1)/(L-1)^2 + (L^3-1)*(L^4-1)/((L-1)*(L^2-1)*(L^2-L))")
    assert motive_rep_full(running_ext, v, SYMBOLIC) / class_pg(v) == expected

@pytest.mark.parametrize("s, d, dim", [(2, [4, 1], 4), (3, [6, 2], 6), (1, [0, 0], 0)])
def test_poincare_polynomials(running_ext: ExtensionData, symbolic_gamma, s, d, dim):
    v = running_ext.ext_vector(s, d)
    assert poincare_polynomial(running_ext, v, SYMBOLIC, symbolic_gamma) == geometric_series(dim)

def test_poincare_needs_a_semistable_type(running_ext: ExtensionData, symbolic_gamma):
    with pytest.raises(NotSemistableError):
        poincare_polynomial(running_ext, running_ext.ext_vector(1, [4, 0]), SYMBOLIC, symbolic_gamma)

def test_poincare_needs_stable_equals_semistable(running_ext: ExtensionData, symbolic_gamma):
    with pytest.raises(HypothesisViolationError):
        poincare_polynomial(running_ext, running_ext.ext_vector(2, [2, 0]), SYMBOLIC, symbolic_gamma)

def test_unstable_type_has_zero_motive(running_ext: ExtensionData, symbolic_gamma):
    assert motive_sst(running_ext, running_ext.ext_vector(1, [4, 0]), SYMBOLIC, symbolic_gamma).is_zero
    assert motive_sst(running_ext, running_ext.ext_vector(0, [3, 1]), SYMBOLIC, symbolic_gamma).is_zero

def test_simple_module_extension(simple_ext: ExtensionData, symbolic_gamma):
    """T = S_1: the only full points of (1|1,0) are the nonzero maps k -> k."""
    v = simple_ext.ext_vector(1, [1, 0])
    assert motive_rep_full(simple_ext, v, SYMBOLIC) == LPolynomial({1: 1, 0: -1})
    assert poincare_polynomial(simple_ext, v, SYMBOLIC, symbolic_gamma) == 1

# --- Other Rep^full sources ---

def test_user_table_source(running_ext: ExtensionData):
    src = UserTableSource(table={"1:1,0": "L^3 - 1"})
    assert motive_rep_full(running_ext, running_ext.ext_vector(1, [1, 0]), src) == LPolynomial({3: 1, 0: -1})
    with pytest.raises(UnsupportedEngineError):
        motive_rep_full(running_ext, running_ext.ext_vector(1, [1, 1]), src)

def test_user_table_degree_is_checked(running_ext: ExtensionData):
    src = UserTableSource(table={"1:1,0": "L^2 - 1"})
    with pytest.raises(InvariantCheckFailed):
        motive_rep_full(running_ext, running_ext.ext_vector(1, [1, 0]), src)

def test_user_table_rejects_unparsable_entries():
    with pytest.raises(ValidationError):
        UserTableSource(table={"1:1,0": "L^3 - y"})

def test_user_table_token_depends_on_contents():
    a = UserTableSource(table={"1:1,0": "L^3 - 1"})
    b = UserTableSource(table={"1:1,0": "L^3 - 1", "1:0,0": "1"})
    assert a.token != b.token
    assert a.token == UserTableSource(table=dict(a.table)).token

def test_source_adapter_discriminates_on_kind():
    assert isinstance(source_adapter.validate_python({"kind": "symbolic_a2"}), SymbolicA2Source)
    interpolated = source_adapter.validate_python({"kind": "interpolated", "primes": [2, 3, 5]})
    assert isinstance(interpolated, InterpolatedSource) and interpolated.primes == (2, 3, 5)
    with pytest.raises(ValidationError):
        source_adapter.validate_python({"kind": fake.word()})

@pytest.mark.parametrize("fields", [
    {"primes": (2, 4)},
    {"primes": (2, 3), "degree_bound": 3},
    {"primes": (2, 3, 5), "confirmation_prime": 3},
    {"confirmation_prime": 9},
])
def test_interpolated_source_validation(fields):
    with pytest.raises(ValidationError):
        InterpolatedSource(**fields)

@pytest.mark.parametrize("s, d", [(1, [1, 0]), (1, [1, 1])])
def test_interpolation_reproduces_symbolic_classes(running_ext: ExtensionData, s, d):
    v = running_ext.ext_vector(s, d)
    interpolated = motive_rep_full(running_ext, v, InterpolatedSource())
    assert interpolated == motive_rep_full(running_ext, v, SYMBOLIC)
