import numpy as np
import pytest

import oracles as O
from socopart.auxnlp import (AuxiliaryProblem, AuxStatus, Sense, SQPOptions,
                             post_check, residuals, solve_auxiliary)
from socopart.errors import NoProgress, PartitionMismatch
from socopart.partition import classify, delta_radius
from socopart.solver import make_triple, solve


def _anchor(inst, eps, tol=1e-9):
    t = solve(inst, eps).triple
    part = classify(t, tol)
    return t, part, delta_radius(t, part).delta


@pytest.mark.parametrize("sense,direction,limit", [
    (Sense.MIN, -1, 1e-9), (Sense.MAX, 1, 1 - 1e-9)])
def test_first_step_matches_curve_oracle(instances, sense, direction, limit):
    inst = instances["problem5"]
    t, part, d = _anchor(inst, 0.5)
    d -= 1e-12
    res = solve_auxiliary(AuxiliaryProblem(inst, t, d, sense))
    expect = O.curve_extreme(O.problem5, 0.5, d, direction, limit)
    assert res.status is AuxStatus.OPTIMAL
    assert res.eps_star == pytest.approx(expect, abs=1e-8)
    assert res.constraint_violation <= 1e-8
    assert res.check is not None


def test_zero_radius_is_no_progress(instances):
    inst = instances["problem5"]
    t, _, _ = _anchor(inst, 0.5)
    res = solve_auxiliary(AuxiliaryProblem(inst, t, 0.0, Sense.MAX))
    assert res.status is AuxStatus.NO_PROGRESS
    assert res.eps_star == t.eps
    with pytest.raises(NoProgress):
        solve_auxiliary(AuxiliaryProblem(inst, t, 1e-18, Sense.MAX),
                        raise_no_progress=True)


def test_problem_validation(instances):
    inst = instances["problem5"]
    t, _, _ = _anchor(inst, 0.5)
    for bad in (-1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            AuxiliaryProblem(inst, t, bad, Sense.MIN)
    with pytest.raises(ValueError):
        AuxiliaryProblem(instances["problem6"], t, 0.1, Sense.MIN)


def test_residuals_of_anchor_and_perturbation(instances):
    inst = instances["problem5"]
    t, _, d = _anchor(inst, 0.5)
    prob = AuxiliaryProblem(inst, t, 0.5 * d, Sense.MAX)
    opt, viol = residuals(t, prob)
    assert viol <= 1e-9
    # the anchor is feasible but not optimal for max eps
    assert opt > 1e-3
    bad = make_triple(inst, 0.5, t.x + 0.1, t.y, t.s)
    assert residuals(bad, prob)[1] >= 0.05


def test_post_check_detects_mismatch(instances):
    inst = instances["problem5"]
    _, part, _ = _anchor(inst, 0.5)
    post_check(inst, 0.3, part)
    with pytest.raises(PartitionMismatch):
        post_check(inst, 1.3, part)


def test_monotone_in_radius(instances):
    inst = instances["problem6"]
    t, _, d = _anchor(inst, 0.2)
    prev = None
    for frac in (0.99, 0.5, 0.25, 0.125):
        res = solve_auxiliary(AuxiliaryProblem(inst, t, frac * d, Sense.MAX),
                              SQPOptions())
        assert res.eps_star > t.eps
        if prev is not None:
            assert res.eps_star <= prev + 1e-10
        prev = res.eps_star
