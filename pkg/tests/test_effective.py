import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyhom import (CertificationError, CorrectorProblem, LevyKernel, PowerLog, TorusGrid,
                     compute_effective, continuation_solve, shear, solve_regularized, synthesize)
from levyhom.effective import limit_generator_symbol

import oracles

KERNEL = LevyKernel(2, 1.4)
M2 = math.pi / (2 - 1.4)


def _effective(kernel, stream, N):
    return compute_effective(solve_regularized(CorrectorProblem(TorusGrid(2, N), kernel, stream)))


@pytest.mark.parametrize("N", [16, 128])
def test_zero_drift_equals_second_moment(N):
    eff = _effective(KERNEL, synthesize(2, modes=0), N)
    np.testing.assert_allclose(eff.a_bar, M2 * np.eye(2), atol=1e-8)
    assert eff.certified


def test_zero_drift_heavy_tail():
    eff = _effective(LevyKernel(2, 1.4, PowerLog(3.0)), synthesize(2, modes=0), 16)
    np.testing.assert_allclose(eff.a_bar, (M2 + math.pi) * np.eye(2), atol=1e-8)


@pytest.mark.parametrize("A", [0.5, 2.0, 3.0])
def test_shear_enhancement_closed_form(A):
    # drift along x_2 varying in x_1 enhances transport along x_2 by A^2 / psi(1)
    eff = _effective(KERNEL, shear(2, amplitude=A), 16)
    want = np.diag([M2, M2 + A ** 2 / oracles.symbol_mpmath(1.0, 1.4)])
    np.testing.assert_allclose(eff.a_bar, want, atol=1e-10)


def test_shear_frozen_value():
    eff = _effective(KERNEL, shear(2, amplitude=2.0), 16)
    assert eff.a_bar[1, 1] == pytest.approx(6.78588228, abs=1e-8)


@pytest.fixture(scope="module")
def random_effective():
    env = synthesize(2, seed=1)
    sol = continuation_solve(CorrectorProblem(TorusGrid(2, 128), KERNEL, env))
    return compute_effective(sol), env


def test_random_environment_symmetric_positive(random_effective):
    eff, _ = random_effective
    assert eff.asymmetry <= 1e-10
    assert eff.eigenvalues[0] > 0
    assert eff.certified
    eff.certify()


def test_decomposition_parts(random_effective):
    eff, _ = random_effective
    np.testing.assert_allclose(eff.a_bar, eff.second_moment + eff.cross + eff.dirichlet, atol=1e-14)
    # the torus average of the cross term vanishes
    assert np.max(np.abs(eff.cross)) <= 1e-12
    # the corrector Dirichlet form is positive semidefinite, so drift only enhances
    assert np.linalg.eigvalsh(eff.dirichlet)[0] >= -1e-14


def test_grid_convergence(random_effective):
    eff, env = random_effective
    coarse = compute_effective(continuation_solve(CorrectorProblem(TorusGrid(2, 64), KERNEL, env)))
    np.testing.assert_allclose(coarse.a_bar, eff.a_bar, atol=1e-9)


def test_provenance(random_effective):
    eff, _ = random_effective
    assert eff.provenance["grid_N"] == 128
    assert eff.provenance["kernel"]["alpha"] == 1.4


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_enhancement_is_nonnegative_for_random_environments(seed):
    eff = _effective(KERNEL, synthesize(2, modes=4, seed=seed), 16)
    assert eff.certified
    assert np.linalg.eigvalsh(eff.a_bar - eff.second_moment)[0] >= -1e-12


def test_certification_failure_is_reported():
    eff = _effective(KERNEL, shear(2), 8)
    eff.problems.append("injected")
    assert not eff.certified
    with pytest.raises(CertificationError):
        eff.certify()


def test_limit_generator_symbol():
    A = np.array([[2.0, 0.5], [0.5, 3.0]])
    assert limit_generator_symbol(A, [1.0, 0.0]) == 1.0
    assert limit_generator_symbol(A, [1.0, 1.0]) == pytest.approx(0.5 * 6.0)
