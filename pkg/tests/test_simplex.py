"""Dense two-phase simplex: status detection and optima against an
independent LP solver."""

import numpy as np
import pytest
import scipy.optimize

from cqcap.simplex import solve_lp
from util import rng_for


def linprog_oracle(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None, maximize=False):
    sign = -1.0 if maximize else 1.0
    res = scipy.optimize.linprog(sign * np.asarray(c, float), A_ub=a_ub, b_ub=b_ub,
                                 A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                                 method="highs")
    return res.status, (sign * res.fun if res.fun is not None else None)


def test_equality_distribution():
    # min/max of c over the probability simplex hits the extreme coordinates
    c = [3.0, 1.0, 2.0]
    a_eq, b_eq = np.ones((1, 3)), [1.0]
    lo = solve_lp(c, a_eq, b_eq)
    hi = solve_lp(c, a_eq, b_eq, maximize=True)
    assert lo.status == hi.status == "optimal"
    assert abs(lo.value - 1.0) < 1e-9 and abs(lo.x[1] - 1.0) < 1e-9
    assert abs(hi.value - 3.0) < 1e-9 and abs(hi.x[0] - 1.0) < 1e-9


def test_inequality_bounds():
    # max x1 + x2 subject to x1 + 2 x2 <= 4, 3 x1 + x2 <= 6
    res = solve_lp([1.0, 1.0], a_ub=[[1.0, 2.0], [3.0, 1.0]], b_ub=[4.0, 6.0],
                   maximize=True)
    assert res.status == "optimal"
    assert abs(res.value - 2.8) < 1e-9  # vertex (1.6, 1.2)
    assert np.allclose(res.x, [1.6, 1.2], atol=1e-9)


def test_infeasible_detected():
    res = solve_lp([1.0, 1.0], a_eq=[[1.0, 1.0]], b_eq=[-1.0])
    assert res.status == "infeasible"
    res = solve_lp([1.0], a_ub=[[1.0], [-1.0]], b_ub=[1.0, -2.0])
    assert res.status == "infeasible"


def test_unbounded_detected():
    res = solve_lp([1.0, 0.0], a_ub=[[0.0, 1.0]], b_ub=[1.0], maximize=True)
    assert res.status == "unbounded"
    res = solve_lp([-1.0])
    assert res.status == "unbounded"


def test_degenerate_rhs_and_negative_b():
    res = solve_lp([1.0, 2.0], a_ub=[[-1.0, -1.0]], b_ub=[-1.0])
    assert res.status == "optimal"
    assert abs(res.value - 1.0) < 1e-9


@pytest.mark.parametrize("seed", range(8))
def test_random_instances_match_oracle(seed):
    rng = rng_for(100 + seed)
    n, m = 6, 4
    a_ub = rng.standard_normal((m, n))
    x_feas = rng.random(n)
    b_ub = a_ub @ x_feas + rng.random(m)  # feasible by construction
    c = rng.standard_normal(n)
    a_eq = np.ones((1, n))
    b_eq = [float(x_feas.sum())]
    for maximize in (False, True):
        res = solve_lp(c, a_eq, b_eq, a_ub, b_ub, maximize=maximize)
        status, value = linprog_oracle(c, a_eq, b_eq, a_ub, b_ub, maximize=maximize)
        assert res.status == "optimal" and status == 0
        assert abs(res.value - value) < 1e-7
        # returned point is feasible and attains the reported value
        assert res.x.min() >= -1e-9
        assert np.all(a_ub @ res.x <= np.asarray(b_ub) + 1e-8)
        assert abs(res.x.sum() - b_eq[0]) < 1e-8
        assert abs(float(np.dot(c, res.x)) - res.value) < 1e-8


def test_barycentric_shape():
    # the dispersion-LP shape: box constraints around a target mixture
    rng = rng_for(42)
    k, dim = 12, 4
    coords = rng.standard_normal((k, dim))
    p_true = rng.dirichlet(np.ones(k))
    target = coords.T @ p_true
    w = 1e-7
    a_ub = np.vstack([coords.T, -coords.T])
    b_ub = np.concatenate([target + w, -(target - w)])
    a_eq, b_eq = np.ones((1, k)), [1.0]
    vvals = rng.random(k)
    res = solve_lp(vvals, a_eq, b_eq, a_ub, b_ub)
    _, value = linprog_oracle(vvals, a_eq, b_eq, a_ub, b_ub)
    assert res.status == "optimal"
    assert abs(res.value - value) < 1e-7
