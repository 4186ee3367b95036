import math

import numpy as np
import pytest
from scipy import stats

from levyhom import LevyKernel, PowerLog, SimConfig, drift, shear, simulate
from levyhom.montecarlo import RadialSampler, effective_diffusivity_mc

KERNEL = LevyKernel(2, 1.4)
HEAVY = LevyKernel(2, 1.4, PowerLog(3.0))


def _radius_cdf(r, alpha, delta, beta1):
    # d = 2: small part 2 pi (r^-a - 1) / a on (delta, 1), tail 2 pi r^-b / b beyond 1
    S = 2 * math.pi
    small = S * (delta ** -alpha - 1) / alpha
    tail = S / beta1
    r = np.asarray(r, dtype=float)
    surv = np.where(r < 1, S * (r ** -alpha - 1) / alpha + tail, S * r ** -beta1 / beta1)
    return 1 - surv / (small + tail)


def test_sampler_rates():
    s = RadialSampler(HEAVY, 0.1)
    assert s.rate == pytest.approx(HEAVY.jump_rate(0.1), rel=1e-13)
    assert s.tail_rate == pytest.approx(2 * math.pi / 3, rel=1e-13)
    assert s.table_error < 1e-8
    assert RadialSampler(KERNEL, 0.1).tail_rate == 0.0


def test_sampler_radii_follow_levy_measure():
    s = RadialSampler(HEAVY, 0.1)
    z = s.sample(np.random.default_rng(0), 200_000)
    r = np.linalg.norm(z, axis=1)
    assert r.min() >= 0.1
    res = stats.kstest(r, lambda x: _radius_cdf(x, 1.4, 0.1, 3.0))
    assert res.pvalue > 1e-3


def test_sampler_directions_are_isotropic():
    z = RadialSampler(KERNEL, 0.2).sample(np.random.default_rng(1), 100_000)
    ang = np.arctan2(z[:, 1], z[:, 0])
    assert stats.kstest(ang, stats.uniform(-math.pi, 2 * math.pi).cdf).pvalue > 1e-3


def test_sampler_rejects_bad_delta():
    with pytest.raises(ValueError):
        RadialSampler(KERNEL, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(KERNEL, delta=1.5)
    with pytest.raises(ValueError):
        SimConfig(KERNEL, M=0)
    with pytest.raises(ValueError):
        SimConfig(KERNEL, times=[2.0, 1.0])
    with pytest.raises(ValueError):
        SimConfig(KERNEL, times=[5.0])
    with pytest.raises(ValueError):
        SimConfig(KERNEL, start="corner")
    assert SimConfig(KERNEL, M=4, n_batches=32).n_batches == 4


def test_default_step_follows_environment_scale():
    assert SimConfig(KERNEL, drift=drift(shear(2, amplitude=2.0))).dt == 1e-2
    # shear: L = 2 pi, cutoff 1, sup|b| = 40
    cfg = SimConfig(KERNEL, drift=drift(shear(2, amplitude=40.0)))
    assert cfg.dt == pytest.approx(0.1 * 2 * math.pi / (8 * 40))


def test_transport_only_constant_drift_is_exact():
    c = np.array([1.0, -0.5])
    cfg = SimConfig(KERNEL, jumps=False, constant_drift=c, M=64, n_batches=8, start="origin", dt=0.1)
    st = simulate(cfg)
    np.testing.assert_allclose(st.mean, st.times[:, None] * c, atol=1e-12)
    np.testing.assert_allclose(st.cov, 0.0, atol=1e-20)
    assert st.jump_count == 0


def test_transport_only_shear_conserves_first_coordinate():
    cfg = SimConfig(KERNEL, drift=drift(shear(2, amplitude=2.0)), jumps=False, M=200, n_batches=8)
    st = simulate(cfg)
    np.testing.assert_allclose(st.mean[:, 0], 0.0, atol=1e-14)
    # uniform start averages the shear velocity to zero
    assert np.all(np.abs(st.mean[:, 1]) < 5 * st.mean_se[:, 1] + 1e-12)


def test_pure_jump_diffusivity_is_second_moment():
    st = simulate(SimConfig(KERNEL, M=8000, seed=3, n_batches=32))
    D, se = effective_diffusivity_mc(st)
    m = math.pi / 0.6
    z = np.abs(D - m * np.eye(2)) / se
    assert np.all(z <= 4)
    assert abs(st.jump_z) <= 5


def test_jump_count_matches_rate():
    st = simulate(SimConfig(HEAVY, M=2000, seed=5, T=1.0))
    assert st.expected_jumps == pytest.approx(HEAVY.jump_rate(0.1) * 2000)
    assert abs(st.jump_z) <= 5


def test_rescaled_horizon():
    st = simulate(SimConfig(KERNEL, M=500, seed=2, T=1.0, times=[0.5, 1.0]), epsilon=0.5)
    # the process runs to time T / eps^2 = 4
    assert st.expected_jumps == pytest.approx(KERNEL.jump_rate(0.1) * 4.0 * 500)
    with pytest.raises(ValueError):
        simulate(SimConfig(KERNEL, M=10), epsilon=0.0)


def test_same_seed_same_statistics():
    cfg = dict(drift=drift(shear(2)), M=300, n_batches=8, T=1.0)
    a = simulate(SimConfig(KERNEL, seed=11, **cfg))
    b = simulate(SimConfig(KERNEL, seed=11, **cfg))
    c = simulate(SimConfig(KERNEL, seed=12, **cfg))
    np.testing.assert_array_equal(a.cov, b.cov)
    assert a.jump_count == b.jump_count
    assert not np.array_equal(a.cov, c.cov)


def test_diffusivity_window_errors():
    st = simulate(SimConfig(KERNEL, M=64, n_batches=4, T=1.0))
    with pytest.raises(ValueError):
        effective_diffusivity_mc(st, t_window=(0.9, 1.0))
    with pytest.raises(ValueError):
        effective_diffusivity_mc(st, t_window=(0.0, 1.0))
