from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pdssdc.design import CodeSpec
from pdssdc.errors import DimensionError, SpecFormatError
from pdssdc.exact import ExactComplex, ExactMatrix, J, ONE, ZERO, format_entry, kron, parse_entry

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=20)
complexes = st.builds(ExactComplex, fractions, fractions)


@given(complexes)
def test_entry_text_round_trip(z):
    assert parse_entry(format_entry(z)) == z


@given(complexes, complexes, complexes)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert (a * a.conjugate()).im == 0
    assert a.abs2() == (a * a.conjugate()).re


@pytest.mark.parametrize("text, value", [
    ("0", ZERO), ("1", ONE), ("-j", -J), ("j", J), ("1/2-1/2*j", ExactComplex(Fraction(1, 2), Fraction(-1, 2))),
    ("-3/4*j", ExactComplex(0, Fraction(-3, 4))),
])
def test_parse_known_entries(text, value):
    assert parse_entry(text) == value
    assert format_entry(value) == text


@pytest.mark.parametrize("bad", ["", "x", "1/0", "2jj", "1+"])
def test_parse_rejects_garbage(bad):
    with pytest.raises(SpecFormatError):
        parse_entry(bad)


def test_matrix_algebra():
    a = ExactMatrix.from_rows([[1, J], [0, 2]])
    b = ExactMatrix.from_rows([[0, 1], [1, 0]])
    assert a @ b == ExactMatrix.from_rows([[J, 1], [2, 0]])
    assert a.H == ExactMatrix.from_rows([[1, 0], [-J, 2]])
    assert (a - a).is_zero()
    assert b.is_row_monomial() and b.is_column_monomial()
    assert a.rank() == 2 and ExactMatrix.from_rows([[1, 2], [2, 4]]).rank() == 1
    with pytest.raises(DimensionError):
        a @ ExactMatrix.zeros(3)


def test_kron_shape_and_blocks():
    a = ExactMatrix.from_rows([[1, 2]])
    k = kron(ExactMatrix.identity(2), a)
    assert k.shape == (2, 4)
    assert k == ExactMatrix.from_rows([[1, 2, 0, 0], [0, 0, 1, 2]])


def test_matrix_is_immutable():
    m = ExactMatrix.identity(2)
    with pytest.raises(AttributeError):
        m.rows = 3


def test_golden_json_round_trip_is_bit_exact(golden):
    for spec in golden.values():
        text = spec.to_json()
        again = CodeSpec.from_json(text)
        assert again == spec
        assert again.to_json() == text


def test_malformed_json_reports_line():
    with pytest.raises(SpecFormatError, match="line 3"):
        CodeSpec.from_json('{\n  "N": 4,\n  "K": ,\n}')


def test_missing_field_and_bad_entry(golden):
    d = golden["x_4_4"].to_dict()
    del d["T"]
    with pytest.raises(SpecFormatError, match="T"):
        CodeSpec.from_dict(d)
    d = golden["x_4_4"].to_dict()
    d["A"][0][0][0] = "1/x"
    with pytest.raises(SpecFormatError):
        CodeSpec.from_dict(d)
