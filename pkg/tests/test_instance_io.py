import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socopart.cones import ConeStructure
from socopart.errors import DimensionMismatch, ParseError
from socopart.instance_io import (BUNDLED, bundled_text, instance_digest,
                                  load_bundled, parse_instance, write_instance)
from socopart.solver import ParametricInstance

GOOD = """\
NAME tiny
cones
3
A
1 0 0
b
1
C 1 0 0   # values may follow the keyword
CBAR
0 1 0
"""


def test_parse_minimal():
    inst = parse_instance(GOOD)
    assert inst.name == "tiny"
    assert inst.structure.dims == (3,)
    np.testing.assert_array_equal(inst.c, [1, 0, 0])
    assert inst.domain is None


@pytest.mark.parametrize("name,dims,m", [("problem5", (3, 2), 3),
                                         ("problem14", (3, 2), 2),
                                         ("problem6", (3, 3), 4),
                                         ("problem8", (3, 3), 2)])
def test_bundled_shapes(name, dims, m):
    inst = load_bundled(name)
    assert inst.structure.dims == dims and inst.m == m


def test_problem5_constraints():
    inst = load_bundled("problem5")
    # x1_1 = 1, x1_3 - x2_1 = 0, x1_2 - x2_2 = 1
    np.testing.assert_array_equal(inst.A, [[1, 0, 0, 0, 0], [0, 0, 1, -1, 0],
                                           [0, 1, 0, 0, -1]])
    np.testing.assert_array_equal(inst.b, [1, 0, 1])


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_roundtrip(name):
    inst = load_bundled(name)
    text = write_instance(inst)
    again = parse_instance(text)
    assert write_instance(again) == text
    for f in ("A", "b", "c", "cbar"):
        np.testing.assert_array_equal(getattr(inst, f), getattr(again, f))
    assert instance_digest(inst) == instance_digest(again)


def test_bundled_unknown():
    with pytest.raises(KeyError):
        bundled_text("problem99")


@pytest.mark.parametrize("text,line", [
    ("CONES\n\nA\n1\nB\n1\nC\n1\nCBAR\n1\n", 1),
    ("CONES\n1\nA\n1\nB\nnan\nC\n1\nCBAR\n1\n", 6),
    ("CONES\n1\nA\n1\nB\n1\nC\ninf\nCBAR\n1\n", 8),
    ("CONES\n1\nA\nx\nB\n1\nC\n1\nCBAR\n1\n", 4),
    ("CONES\n1.5\nA\n1\nB\n1\nC\n1\nCBAR\n1\n", 2),
    ("1 2\nCONES\n1\n", 1),
    ("CONES\n1\nCONES\n1\n", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_instance(text)
    assert err.value.line == line
    assert err.value.code == "PARSE_ERROR"


def test_parse_error_column():
    with pytest.raises(ParseError) as err:
        parse_instance("CONES\n3\nA\n1 0 zz\nB\n1\nC\n0 0 0\nCBAR\n0 0 0\n")
    assert (err.value.line, err.value.column) == (4, 5)


def test_missing_section():
    with pytest.raises(ParseError, match="missing section CBAR"):
        parse_instance("CONES\n1\nA\n1\nB\n1\nC\n1\n")


@pytest.mark.parametrize("text", [
    "CONES\n2\nA\n1 0 0\nB\n1\nC\n1 0\nCBAR\n1 0\n",
    "CONES\n2\nA\n1 0\nB\n1 2\nC\n1 0\nCBAR\n1 0\n",
    "CONES\n2\nA\n1 0\nB\n1\nC\n1 0 0\nCBAR\n1 0\n",
])
def test_dimension_mismatch(text):
    with pytest.raises(DimensionMismatch):
        parse_instance(text)


def test_domain_accepts_inf_and_checks_order():
    inst = parse_instance(GOOD + "DOMAIN -inf 2\n")
    assert inst.domain == (-np.inf, 2.0)
    with pytest.raises(ParseError):
        parse_instance(GOOD + "DOMAIN 2 1\n")


floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=3), st.data())
def test_roundtrip_random(dims, data):
    structure = ConeStructure(tuple(dims))
    n = structure.n
    m = data.draw(st.integers(1, n))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    A = rng.standard_normal((m, n))
    vec = lambda k: np.array(data.draw(st.lists(floats, min_size=k, max_size=k)))
    inst = ParametricInstance(structure, A, vec(m), vec(n), vec(n))
    again = parse_instance(write_instance(inst))
    for f in ("A", "b", "c", "cbar"):
        np.testing.assert_array_equal(getattr(inst, f), getattr(again, f))
