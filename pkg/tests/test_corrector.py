import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyhom import (ConvergenceError, CorrectorProblem, LevyKernel, PowerLog, TorusGrid,
                     continuation_solve, energy_identity_check, shear, solve_regularized,
                     synthesize)
from levyhom.corrector import (clip_stream, dense_reference_solve, sublinearity_scan,
                               weak_residual)

import oracles

KERNEL = LevyKernel(2, 1.4)
PSI1 = oracles.symbol_mpmath(1.0, 1.4)


# ---------------------------------------------------------------- clipping

def test_clip_identity_inside_and_zero_outside():
    s = np.array([-3.0, -2.0, -0.7, 0.0, 0.9, 1.0, 2.0, 5.0])
    out = clip_stream(s, 1.0)
    np.testing.assert_array_equal(out[[2, 3, 4, 5]], s[[2, 3, 4, 5]])
    np.testing.assert_array_equal(out[[0, 1, 6, 7]], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(0.1, 5))
def test_clip_is_odd_and_bounded(s, R):
    a, b = clip_stream(s, R), clip_stream(-s, R)
    assert a == -b
    assert abs(a) <= 1.06 * R


def test_clip_is_continuously_differentiable():
    R, h = 1.3, 1e-7
    for s0 in (R, 2 * R):
        left = (clip_stream(s0, R) - clip_stream(s0 - h, R)) / h
        right = (clip_stream(s0 + h, R) - clip_stream(s0, R)) / h
        assert left == pytest.approx(right, abs=1e-5)


def test_clip_infinite_level_is_identity():
    s = np.linspace(-4, 4, 9)
    np.testing.assert_array_equal(clip_stream(s, math.inf), s)


# ---------------------------------------------------------------- problem setup

def test_problem_validation():
    with pytest.raises(ValueError):
        CorrectorProblem(TorusGrid(2, 8, L=3.0), KERNEL, shear())
    with pytest.raises(ValueError):
        CorrectorProblem(TorusGrid(3, 8), KERNEL, shear())
    with pytest.raises(ValueError):
        CorrectorProblem(TorusGrid(2, 8), KERNEL, shear(), theta=-1.0)


def test_default_clip_level_is_inactive():
    pb = CorrectorProblem(TorusGrid(2, 16), KERNEL, synthesize(2, modes=3, seed=0))
    np.testing.assert_allclose(pb.bR, pb.b, atol=1e-12)


# ---------------------------------------------------------------- closed forms

def test_shear_corrector_closed_form():
    g = TorusGrid(2, 16)
    sol = solve_regularized(CorrectorProblem(g, KERNEL, shear(2, amplitude=2.0)), 0.0)
    x = g.points()[0]
    np.testing.assert_allclose(sol.phi[0], 0.0, atol=1e-14)
    np.testing.assert_allclose(sol.phi[1], oracles.shear_corrector(x, 2.0, PSI1), atol=1e-12)


@pytest.mark.parametrize("theta", [0.01, 0.3, 1.0])
def test_regularized_shear_closed_form(theta):
    # the regularizer adds theta (1 + |k|^2) = 2 theta at |k| = 1
    g = TorusGrid(2, 16)
    sol = solve_regularized(CorrectorProblem(g, KERNEL, shear(2, amplitude=2.0)), theta)
    x = g.points()[0]
    np.testing.assert_allclose(sol.phi[1], 2.0 * np.sin(x) / (PSI1 + 2 * theta), atol=1e-12)


def test_zero_drift_corrector_vanishes():
    s0 = synthesize(2, modes=0)
    sol = solve_regularized(CorrectorProblem(TorusGrid(2, 8), KERNEL, s0))
    assert np.all(sol.phi == 0)


# ---------------------------------------------------------------- dense oracle

@pytest.mark.parametrize("N", [8, 12])
@pytest.mark.parametrize("theta", [0.1, 0.0])
def test_matches_dense_solve_on_shear(N, theta):
    pb = CorrectorProblem(TorusGrid(2, N), KERNEL, shear(2, amplitude=2.0), tol=1e-13)
    sol = solve_regularized(pb, theta)
    assert np.max(np.abs(sol.phi - dense_reference_solve(pb, theta))) <= 1e-9


@pytest.mark.parametrize("theta", [0.1, 0.0])
def test_matches_dense_solve_on_random_environment(theta):
    pb = CorrectorProblem(TorusGrid(2, 12), KERNEL, synthesize(2, modes=3, seed=7), tol=1e-13)
    sol = solve_regularized(pb, theta)
    assert np.max(np.abs(sol.phi - dense_reference_solve(pb, theta))) <= 1e-9


def test_dense_solve_refuses_large_grid():
    with pytest.raises(ValueError):
        dense_reference_solve(CorrectorProblem(TorusGrid(2, 128), KERNEL, shear()))


# ---------------------------------------------------------------- continuation and identities

@pytest.fixture(scope="module")
def random_solution():
    pb = CorrectorProblem(TorusGrid(2, 64), KERNEL, synthesize(2, seed=1))
    return continuation_solve(pb)


def test_continuation_path(random_solution):
    path = random_solution.theta_path
    assert [p["theta"] for p in path] == [1.0, 0.1, 0.01, 0.001, 0.0]
    assert all(p["residual"] <= 1e-11 for p in path)
    # energy grows as the regularization is removed
    e = [sum(p["energy"]) for p in path]
    assert all(b >= a for a, b in zip(e, e[1:]))


def test_continuation_rejects_bad_schedule():
    pb = CorrectorProblem(TorusGrid(2, 8), KERNEL, shear())
    for sched in ([], [0.1, 0.5], [0.1, -0.1]):
        with pytest.raises(ValueError):
            continuation_solve(pb, sched)


def test_energy_identity_and_polarization(random_solution):
    rep = energy_identity_check(random_solution)
    assert rep.max_gap <= 1e-6
    assert np.max(rep.polarized_gap) <= 1e-6
    np.testing.assert_allclose(np.diag(rep.polarized_lhs), 4 * rep.lhs, rtol=1e-12)


def test_energy_identity_gap_shrinks_with_resolution():
    env = synthesize(2, seed=1)
    gaps = [energy_identity_check(solve_regularized(CorrectorProblem(TorusGrid(2, N), KERNEL, env))).max_gap
            for N in (32, 64)]
    assert gaps[1] <= gaps[0] / 4


def test_weak_residual_vanishes_for_band_limited_tests(random_solution):
    g = random_solution.grid
    rng = np.random.default_rng(0)
    for k in range(2):
        f = g.dealias(rng.normal(size=g.shape))
        f -= f.mean()
        scale = math.sqrt(g.inner(f, f)) * max(1.0, float(np.max(np.abs(random_solution.phi))))
        assert weak_residual(random_solution, f, k) <= 1e-9 * scale


def test_solution_is_mean_zero(random_solution):
    assert np.max(np.abs(random_solution.phi.mean(axis=(1, 2)))) < 1e-14


def test_nonconvergence_is_reported():
    pb = CorrectorProblem(TorusGrid(2, 32), KERNEL, synthesize(2, modes=8, seed=2),
                          tol=1e-14, maxit=1, restart=2)
    with pytest.raises(ConvergenceError) as info:
        solve_regularized(pb, 0.0)
    assert "continuation" in str(info.value)


def test_heavy_tail_kernel_corrector_matches_dense():
    k = LevyKernel(2, 1.4, PowerLog(3.0))
    pb = CorrectorProblem(TorusGrid(2, 8), k, synthesize(2, modes=2, seed=3), tol=1e-13)
    sol = solve_regularized(pb, 0.0)
    assert np.max(np.abs(sol.phi - dense_reference_solve(pb, 0.0))) <= 1e-9


# ---------------------------------------------------------------- sublinearity

def test_sublinearity_slopes(random_solution):
    scan = sublinearity_scan(random_solution)
    assert np.all(np.abs(scan["slope_l2"] - 2.0) <= 0.1)
    assert scan["l2"].shape == (2, 6)
    assert np.all(np.diff(scan["l2"], axis=1) < 0)


def test_sublinearity_shear_closed_form():
    # eps^2 int_{B(0,r)} |phi(x/eps)|^2 -> eps^2 |B| avg |phi|^2 as eps -> 0
    g = TorusGrid(2, 16)
    sol = solve_regularized(CorrectorProblem(g, KERNEL, shear(2, amplitude=2.0)))
    scan = sublinearity_scan(sol, epsilons=[2.0 ** -10])
    avg = 0.5 * (2.0 / PSI1) ** 2
    assert scan["l2"][1, 0] / 2.0 ** -20 == pytest.approx(math.pi * avg, rel=1e-4)


def test_sublinearity_rejects_bad_scales(random_solution):
    with pytest.raises(ValueError):
        sublinearity_scan(random_solution, epsilons=[0.5, 2.0])
