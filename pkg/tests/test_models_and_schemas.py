from fractions import Fraction

import pytest
from faker import Faker
from pydantic import ValidationError

from app.exceptions import DimensionMismatchError, InvalidHNTypeError, ZeroDimensionError
from app.models import INFINITY, Arrow, DimVector, ExtDimVector, ExtensionData, HNType, Quiver
from app.schemas import CheckResponse, CheckResult, QmodConfig

fake = Faker()

VERTICES = ["1", "2"]

# --- Test domain models (app/models.py) ---

def test_quiver_records_acyclicity(a2_quiver: Quiver):
    """
    An acyclic quiver has a topological order; a cycle is allowed but has none.
    """
    assert a2_quiver.is_acyclic
    assert a2_quiver.topological_order == ("1", "2")

    loop = Quiver(vertices=("1",), arrows=(Arrow(name="x", source="1", target="1"),))
    assert not loop.is_acyclic
    with pytest.raises(ValueError):
        loop.topological_order

def test_quiver_rejects_unknown_vertex():
    with pytest.raises(ValidationError):
        Quiver(vertices=("1", "2"), arrows=(Arrow(name="m", source="1", target="3"),))

def test_quiver_rejects_duplicate_names():
    with pytest.raises(ValidationError):
        Quiver(vertices=("1", "1"))
    with pytest.raises(ValidationError):
        Quiver(vertices=("1", "2"), arrows=(Arrow(name="m", source="1", target="2"),
                                            Arrow(name="m", source="2", target="1")))

def test_dim_vector_arithmetic(a2_quiver: Quiver):
    a = a2_quiver.dim_vector([fake.random_int(0, 5), fake.random_int(0, 5)])
    b = a2_quiver.dim_vector([fake.random_int(0, 5), fake.random_int(0, 5)])
    total = a + b
    assert total.dims == (a.dims[0] + b.dims[0], a.dims[1] + b.dims[1])
    assert (total - b) == a
    assert a.le(total)
    assert total.total == a.total + b.total

def test_dim_vector_rejects_negative_entries(a2_quiver: Quiver):
    with pytest.raises(ValidationError):
        a2_quiver.dim_vector([1, -1])

def test_dim_vector_from_mapping_needs_every_vertex(a2_quiver: Quiver):
    assert DimVector.from_mapping(a2_quiver, {"2": 1, "1": 4}).dims == (4, 1)
    with pytest.raises(DimensionMismatchError):
        DimVector.from_mapping(a2_quiver, {"1": 4})

def test_ext_dim_vector_parse():
    """
    The CLI form s:d1,d2 is read in vertex order.
    """
    v = ExtDimVector.parse("2:4,1", ["1", "2"])
    assert v.s == 2
    assert v.d["1"] == 4 and v.d["2"] == 1
    assert v.cli_form() == "2:4,1"
    assert str(v) == "(2|4,1)"
    assert v.slope == Fraction(2, 7)

@pytest.mark.parametrize("text", ["2:4", "2;4,1", "x:4,1", "2:-1,1", "-1:0,0"])
def test_ext_dim_vector_parse_rejects_malformed(text):
    with pytest.raises(DimensionMismatchError):
        ExtDimVector.parse(text, ["1", "2"])

def test_ext_dim_vector_zero_slope_is_rejected():
    with pytest.raises(ZeroDimensionError):
        ExtDimVector.parse("0:0,0", ["1", "2"]).slope

def test_hn_type_requires_decreasing_slopes():
    v = ExtDimVector.parse
    hn = HNType(steps=(v("1:2,0", VERTICES), v("1:2,1", VERTICES)))
    assert hn.weight == v("2:4,1", VERTICES)
    assert hn.length == 2
    assert str(hn) == "(1|2,0) > (1|2,1)"

    with pytest.raises(InvalidHNTypeError):
        HNType(steps=(v("1:2,1", VERTICES), v("1:2,0", VERTICES)))
    with pytest.raises(InvalidHNTypeError):
        HNType(steps=(v("1:1,0", VERTICES), v("1:0,1", VERTICES)))

def test_hn_type_rejects_zero_steps():
    with pytest.raises(InvalidHNTypeError):
        HNType(steps=(ExtDimVector.parse("0:0,0", VERTICES),))

def test_extension_data_checks_matrix_shapes(a2_quiver: Quiver):
    with pytest.raises(ValidationError):
        ExtensionData(quiver=a2_quiver, t=a2_quiver.dim_vector([3, 1]), t_matrices={"m": ((1, 0),)})
    with pytest.raises(ValidationError):
        ExtensionData(quiver=a2_quiver, t=a2_quiver.dim_vector([3, 1]), t_matrices={"n": ((1, 0, 0),)})

def test_extension_data_reserves_the_extension_vertex():
    quiver = Quiver(vertices=(INFINITY, "2"), arrows=(Arrow(name="m", source=INFINITY, target="2"),))
    with pytest.raises(ValidationError):
        ExtensionData(quiver=quiver, t=quiver.dim_vector([1, 1]))

def test_extension_fingerprint_ignores_flags(running_ext: ExtensionData):
    verified = running_ext.model_copy(update={"rigidity_verified": True})
    assert verified.fingerprint() == running_ext.fingerprint()
    assert verified.is_rigid

# --- Test config and response schemas (app/schemas.py) ---

def test_config_builds_the_running_extension(running_config: QmodConfig):
    ext = running_config.to_extension()
    assert ext.t.dims == (3, 1)
    assert ext.matrix("m") == ((1, 0, 0),)
    assert ext.assume_rigid and not ext.assume_end_trivial
    assert running_config.budgets.max_enumeration == 10**8

def test_config_rejects_wrong_t_length(running_config: QmodConfig):
    data = running_config.model_dump()
    data["extension"]["t"] = [3, 1, 0]
    with pytest.raises(ValidationError):
        QmodConfig.model_validate(data)

def test_config_rejects_unknown_keys(running_config: QmodConfig):
    data = running_config.model_dump()
    data[fake.word() + "_extra"] = 1
    with pytest.raises(ValidationError):
        QmodConfig.model_validate(data)

def test_config_gamma_overrides_are_parsed(running_config: QmodConfig):
    data = running_config.model_dump()
    data["gamma_overrides"] = {"1:1,0": True, "2:5,1": False}
    config = QmodConfig.model_validate(data)
    table = config.gamma_table()
    assert table[config.parse_dim("1:1,0")] is True
    assert table[config.parse_dim("2:5,1")] is False

def test_config_rejects_malformed_override_keys(running_config: QmodConfig):
    data = running_config.model_dump()
    data["gamma_overrides"] = {"1:1": True}
    with pytest.raises(DimensionMismatchError):
        QmodConfig.model_validate(data)

def test_config_semi_invariants(running_config: QmodConfig):
    data = running_config.model_dump()
    data["semi_invariants"] = [{"name": "h", "dim": "2:4,1", "letters": {"A": "rho1_1", "B": "rho2_1"},
                                "grid": [["A", "B"]]}]
    sis = QmodConfig.model_validate(data).block_semi_invariants()
    assert list(sis) == ["h"]
    assert sis["h"].v.cli_form() == "2:4,1"
    assert sis["h"].sign == 1

def test_check_response_passes_only_without_failures():
    ok = CheckResult(name="a", passed=True)
    skipped = CheckResult(name="b", passed=True, skipped=True, detail="no engine")
    failed = CheckResult(name="c", passed=False)
    assert CheckResponse(results=[ok, skipped]).passed
    assert not CheckResponse(results=[ok, failed]).passed
