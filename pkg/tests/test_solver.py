import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from socopart.cones import ConeStructure
from socopart.errors import InfeasibleOrUnbounded
from socopart.solver import (ParametricInstance, check_interior_point,
                             jacobian_F, kkt_residual_F, max_step,
                             nt_scaling, solve)


def _interior(rng, n):
    tail = rng.standard_normal(n - 1)
    return np.concatenate([[np.linalg.norm(tail) + rng.uniform(0.01, 2)], tail])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=3),
       st.integers(0, 2**32 - 1))
def test_nt_scaling_maps_x_and_s_to_same_point(dims, seed):
    rng = np.random.default_rng(seed)
    structure = ConeStructure(tuple(dims))
    x = np.concatenate([_interior(rng, d) if d > 1 else [rng.uniform(0.1, 3)]
                        for d in dims])
    s = np.concatenate([_interior(rng, d) if d > 1 else [rng.uniform(0.1, 3)]
                        for d in dims])
    W, Wi, lam = nt_scaling(structure, x, s)
    np.testing.assert_allclose(W @ Wi, np.eye(structure.n), atol=1e-9)
    np.testing.assert_allclose(W @ x, Wi @ s, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(lam, W @ x)


def test_max_step_boundary():
    structure = ConeStructure((3,))
    u = np.array([1.0, 0.0, 0.0])
    du = np.array([0.0, 1.0, 0.0])
    a = max_step(structure, u, du)
    assert a == pytest.approx(1.0)
    assert max_step(structure, u, np.array([1.0, 0.0, 0.0])) == np.inf


@pytest.mark.parametrize("eps", np.linspace(0.05, 0.95, 7))
def test_problem5_closed_form(instances, eps):
    rep = solve(instances["problem5"], eps)
    x, s = O.problem5(eps)
    np.testing.assert_allclose(rep.triple.x, x, atol=1e-7)
    np.testing.assert_allclose(rep.triple.s, s, atol=1e-7)
    F = kkt_residual_F(instances["problem5"], eps, rep.triple.x, rep.triple.y,
                       rep.triple.s)
    assert np.abs(F).max() < 1e-9


def test_jacobian_F_matches_finite_differences(instances):
    inst = instances["problem5"]
    t = solve(inst, 0.3).triple
    J = jacobian_F(t, inst.A)
    z = np.concatenate([t.x, t.y, t.s])
    n, m = inst.n, inst.m

    def F(z):
        return kkt_residual_F(inst, 0.3, z[:n], z[n:n + m], z[n + m:])

    h = 1e-6
    fd = np.column_stack([(F(z + h * e) - F(z - h * e)) / (2 * h)
                          for e in np.eye(z.size)])
    np.testing.assert_allclose(J, fd, atol=1e-6)


def test_sigma_min_positive_when_nondegenerate(instances):
    assert solve(instances["problem5"], 0.5).sigma_min_F == pytest.approx(0.169, abs=1e-3)


def test_dual_infeasible_region_detected(instances):
    # below 1 - sqrt(2) the objective of problem14 is unbounded
    with pytest.raises(InfeasibleOrUnbounded):
        solve(instances["problem14"], -0.5)


def test_interior_point_check(instances):
    ok, (x, y, s) = check_interior_point(instances["problem6"], 0.2)
    assert ok
    inst = instances["problem6"]
    np.testing.assert_allclose(inst.A @ x, inst.b, atol=1e-7)
    # x1_1 = 1 forces ||x1_2:|| <= 1 but the cone interior is still reachable
    structure = ConeStructure((1, 1))
    inf = ParametricInstance(structure, [[1.0, 1.0]], [-1.0], [1.0, 1.0],
                             [0.0, 0.0])
    assert check_interior_point(inf, 0.0)[0] is False


def test_solve_rejects_bad_tol(instances):
    with pytest.raises(ValueError):
        solve(instances["problem5"], 0.5, tol=0.0)


def test_linear_program_as_one_dimensional_cones():
    # min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0 -> x = (1, 0)
    inst = ParametricInstance(ConeStructure((1, 1)), [[1.0, 1.0]], [1.0],
                              [1.0, 2.0], [0.0, 0.0])
    rep = solve(inst, 0.0)
    np.testing.assert_allclose(rep.triple.x, [1.0, 0.0], atol=1e-8)
    assert rep.triple.objective == pytest.approx(1.0)
