import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from socopart.reporting import (RunReport, Table, concavity_violations,
                                emit_value_function)

CONCAVE_RANGES = {
    "problem5": (-0.5, 1.5),
    "problem6": (-1.0, 2.0),
    "problem8": (-0.5, 1.5),
    "problem14": (-0.35, 2.0),
    "problem14_modified": (-2.0, 0.95),
    "problem15": (-2.0, 3.0),
}


@pytest.mark.parametrize("name", sorted(CONCAVE_RANGES))
def test_value_function_is_concave(instances, name):
    lo, hi = CONCAVE_RANGES[name]
    vf = emit_value_function(instances[name], np.linspace(lo, hi, 25))
    assert all(e is None for e in vf.errors)
    assert vf.concave, vf.violations


def test_failed_solves_become_nan(instances):
    vf = emit_value_function(instances["problem14"], [-0.6, 0.0, 0.5])
    assert math.isnan(vf.psi[0]) and vf.errors[0]
    assert vf.table().rows[0][-1] == vf.errors[0]


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=12, unique=True))
def test_concave_functions_have_no_violations(xs):
    e = np.sort(np.array(xs))
    assert concavity_violations(e, -e ** 2) == ()
    assert concavity_violations(e, np.minimum(e, 1 - 2 * e)) == ()


def test_convex_kink_is_flagged():
    e = np.array([-1.0, 0.0, 1.0])
    assert concavity_violations(e, np.abs(e)) == (1,)


def test_table_formats():
    t = Table(["a", "b"], title="t")
    t.add(1, 1 / 3)
    t.add(True, None)
    assert "0.333333" in t.to_text()
    assert "0.33333333333333331" in t.to_csv()
    assert t.to_csv().splitlines()[-1] == "true,"
    with pytest.raises(ValueError):
        t.add(1)
    with pytest.raises(ValueError):
        t.render("xml")


def test_run_report_csv_comments():
    rep = RunReport("socopart x", "sha256:0", [Table(["a"])], ["hello"], 0.5)
    out = rep.render("csv")
    assert "# hello" in out and "# wall time: 0.500 s" in out
