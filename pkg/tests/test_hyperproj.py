"""Projection onto {u v >= delta, u >= 0}: quartic, cases, KKT, fuzzing."""

import numpy as np
import pytest

from blindphase.hyperproj import (kkt_residuals, project_batch, project_point,
                                  solve_quartic)
from helpers import boundary_grid_distance, quartic_value

# Output of an independent two-stage boundary grid search for theta=(5,-1),
# delta=4, frozen before the implementation existed.
_ORACLE_5_M1_4 = (5.255103246975745, 0.7611684027008356)


def _fuzz(count, seed=0):
    rng = np.random.default_rng(seed)
    t1 = rng.uniform(-10.0, 10.0, count)
    t2 = rng.uniform(-10.0, 10.0, count)
    d = rng.uniform(0.0, 25.0, count)
    d[d == 0.0] = 25.0  # open interval (0, 25]
    return t1, t2, d


# -- quartic ---------------------------------------------------------------

def test_quartic_frozen_roots():
    roots = solve_quartic(1.0, 1.0, 9.0)      # u^4 - u^3 + 9u - 81
    assert np.any(np.abs(roots - 3.0) < 1e-10)
    roots2 = solve_quartic(0.0, 0.0, 4.0)     # u^4 - 16
    assert np.allclose(roots2, [-2.0, 2.0], atol=1e-10)


def test_quartic_residuals_and_oracle_agreement():
    t1, t2, d = _fuzz(2000, seed=1)
    for a, b, dd in zip(t1, t2, d):
        roots = solve_quartic(a, b, dd)
        assert len(roots) >= 1           # constant term -delta^2 < 0
        assert np.all(np.abs(quartic_value(roots, a, b, dd)) <= 1e-9)
        oracle = np.roots([1.0, -a, 0.0, dd * b, -dd * dd])
        for r in roots:
            gap = np.min(np.abs(oracle - r))
            assert gap <= 1e-8 * max(1.0, abs(r))


def test_quartic_returns_sorted():
    roots = solve_quartic(0.5, -3.0, 2.0)
    assert np.all(np.diff(roots) >= 0)


# -- scalar projection ------------------------------------------------------

def test_project_feasible_is_identity():
    assert project_point(3.0, 2.0, 4.0) == (3.0, 2.0)


def test_project_symmetric_cases():
    u, v = project_point(0.0, 0.0, 4.0)
    assert np.isclose(u, 2.0, atol=1e-12) and np.isclose(v, 2.0, atol=1e-12)
    u, v = project_point(1.0, 1.0, 9.0)
    assert np.isclose(u, 3.0, atol=1e-10) and np.isclose(v, 3.0, atol=1e-10)


def test_project_against_frozen_grid_oracle():
    u, v = project_point(5.0, -1.0, 4.0)
    assert abs(u - _ORACLE_5_M1_4[0]) <= 1e-4
    assert abs(v - _ORACLE_5_M1_4[1]) <= 1e-4
    assert np.isclose(u * v, 4.0, rtol=1e-12)


def test_project_rejects_negative_delta():
    with pytest.raises(ValueError):
        project_point(1.0, 1.0, -0.5)


# -- batch semantics ---------------------------------------------------------

def test_batch_singleton_matches_scalar():
    u, v = project_batch(np.array([5.0]), np.array([-1.0]), np.array([4.0]))
    su, sv = project_point(5.0, -1.0, 4.0)
    assert u[0] == su and v[0] == sv


def test_batch_permutation_equivariance():
    t1, t2, d = _fuzz(257, seed=2)
    u, v = project_batch(t1, t2, d)
    perm = np.random.default_rng(3).permutation(len(t1))
    up, vp = project_batch(t1[perm], t2[perm], d[perm])
    assert np.array_equal(up, u[perm])
    assert np.array_equal(vp, v[perm])


def test_batch_feasible_inputs_unchanged():
    t1 = np.array([1.0, 2.0, 5.0])
    t2 = np.array([4.0, 3.0, 2.0])
    d = np.array([4.0, 6.0, 10.0])
    u, v = project_batch(t1, t2, d)
    assert np.array_equal(u, t1) and np.array_equal(v, t2)


def test_batch_length_mismatch():
    with pytest.raises(ValueError):
        project_batch(np.ones(3), np.ones(2), np.ones(3))


# -- delta ~ 0 closure --------------------------------------------------------

def test_closure_projection_cases():
    # axis point (0, t2) beats the quadrant corner when t2 is very negative
    assert project_point(-1.0, -9.0, 0.0) == (0.0, -9.0)
    # quadrant projection wins otherwise
    assert project_point(3.0, -2.0, 0.0) == (3.0, 0.0)
    assert project_point(-3.0, 5.0, 0.0) == (0.0, 5.0)
    assert project_point(2.0, 7.0, 0.0) == (2.0, 7.0)


def test_closure_tiebreak_distances():
    # (-1, -1): quadrant corner (0,0) at distance^2 2, axis (0,-1) at 1
    assert project_point(-1.0, -1.0, 0.0) == (0.0, -1.0)


# -- invariants on fuzzed batches ---------------------------------------------

def test_fuzz_feasibility_idempotence_kkt():
    t1, t2, d = _fuzz(2000, seed=4)
    u, v = project_batch(t1, t2, d)
    # feasibility with the stated slack
    assert np.all(u >= 0)
    assert np.all(u * v >= d - 1e-9 * np.maximum(1.0, d))
    # boundary-active outputs keep u strictly positive when delta > 0
    assert np.all(u[d > 0] > 0)
    # idempotence
    u2, v2 = project_batch(u, v, d)
    scale = np.maximum(1.0, np.abs(u) + np.abs(v))
    assert np.max(np.abs(u2 - u) / scale) <= 1e-10
    assert np.max(np.abs(v2 - v) / scale) <= 1e-10
    # stationarity residuals
    r1, r2 = kkt_residuals(t1, t2, d, u, v)
    assert np.max(np.abs(r1)) <= 1e-8
    assert np.max(np.abs(r2)) <= 1e-8


def test_fuzz_distance_against_grid_oracle():
    t1, t2, d = _fuzz(2000, seed=5)
    u, v = project_batch(t1, t2, d)
    dist = (u - t1) ** 2 + (v - t2) ** 2
    oracle = boundary_grid_distance(t1, t2, d)
    infeasible = (t1 < 0) | (t1 * t2 < d)
    assert np.all(dist[infeasible] <= oracle[infeasible] + 1e-6)
    assert np.all(dist[~infeasible] == 0.0)


def test_kkt_flags_non_projections():
    # a feasible boundary point that is not the nearest one
    r1, r2 = kkt_residuals(5.0, -1.0, 4.0, np.array([1.0]), np.array([4.0]))
    assert max(abs(r1[0]), abs(r2[0])) > 1e-2


# -- feasible set geometry ----------------------------------------------------

def test_feasible_set_is_convex_on_the_branch():
    # needed by the solver: averaging feasible auxiliaries stays feasible
    rng = np.random.default_rng(6)
    for _ in range(200):
        d = rng.uniform(0.1, 10.0)
        ua, ub = rng.uniform(0.05, 10.0, 2)
        va = d / ua * rng.uniform(1.0, 3.0)
        vb = d / ub * rng.uniform(1.0, 3.0)
        t = rng.uniform(0.0, 1.0)
        um = t * ua + (1 - t) * ub
        vm = t * va + (1 - t) * vb
        assert um >= 0 and um * vm >= d * (1.0 - 1e-12)
