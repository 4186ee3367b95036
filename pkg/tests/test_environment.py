import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from levyhom import StreamField, drift, shear, synthesize
from levyhom.environment import (assumption_exponents, eval_drift, eval_stream, half_lattice,
                                 modes_csv_text, moment_report, read_modes_csv, sample_drift,
                                 sample_stream, write_modes_csv, _fractional_integrand_field)
from levyhom.grid import TorusGrid


def _fd_drift(stream, x, h=1e-5):
    """-sum_l d_l H_jl by central differences of the point evaluator."""
    d = stream.d
    out = np.zeros(d)
    for l in range(d):
        e = np.zeros(d)
        e[l] = h
        dH = (eval_stream(stream, x + e) - eval_stream(stream, x - e)) / (2 * h)
        out -= dH[:, l]
    return out


# ---------------------------------------------------------------- construction

def test_half_lattice_counts_and_uniqueness():
    for d, K in ((2, 3), (3, 2)):
        m = half_lattice(d, K)
        assert m.shape[0] == ((2 * K + 1) ** d - 1) // 2
        both = {tuple(v) for v in m} | {tuple(-v) for v in m}
        assert len(both) == 2 * m.shape[0]


def test_stream_rejects_symmetric_amplitude():
    A = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    with pytest.raises(ValueError):
        StreamField(2, 2 * math.pi, np.array([[1, 0]]), A, np.zeros(1))


def test_stream_rejects_zero_mode_and_conjugates():
    A = np.array([[[0.0, 1.0], [-1.0, 0.0]]] * 2)
    with pytest.raises(ValueError):
        StreamField(2, 2 * math.pi, np.array([[0, 0], [1, 0]]), A, np.zeros(2))
    with pytest.raises(ValueError):
        StreamField(2, 2 * math.pi, np.array([[1, 2], [-1, -2]]), A, np.zeros(2))


def test_synthesize_is_deterministic_and_seeded():
    a, b, c = synthesize(2, seed=4), synthesize(2, seed=4), synthesize(2, seed=5)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    np.testing.assert_array_equal(a.phases, b.phases)
    assert not np.array_equal(a.amplitudes, c.amplitudes)


def test_synthesize_rejects_non_square_summable_spectrum():
    with pytest.raises(ValueError):
        synthesize(2, spectrum_exponent=1.0)


def test_synthesize_amplitude_decay():
    s = synthesize(2, modes=12, spectrum_exponent=2.0, amplitude_scale=0.5, seed=0)
    norms = np.linalg.norm(s.modes, axis=1)
    # amplitude / (scale |m|^-s) is standard normal
    z = s.amplitudes[:, 0, 1] / (0.5 * norms ** -2.0)
    assert abs(np.mean(z)) < 0.2 and abs(np.std(z) - 1) < 0.1


def test_shear_field_values():
    s = shear(2, amplitude=2.0)
    x = np.array([[0.3, 1.7], [2.0, -1.0]])
    H = eval_stream(s, x)
    np.testing.assert_allclose(H[:, 0, 1], 2.0 * np.cos(x[:, 0]))
    np.testing.assert_allclose(H[:, 1, 0], -2.0 * np.cos(x[:, 0]))
    b = eval_drift(drift(s), x)
    # b_2 = -d_1 H_21 = d_1 H_12 = -2 sin x_1
    np.testing.assert_allclose(b[:, 0], 0.0, atol=1e-15)
    np.testing.assert_allclose(b[:, 1], -2.0 * np.sin(x[:, 0]))


# ---------------------------------------------------------------- drift

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_drift_is_divergence_free(seed, d):
    s = synthesize(d, modes=3, seed=seed)
    div = drift(s).spectral_divergence()
    scale = np.max(np.abs(drift(s).coefficients)) * np.max(np.abs(s.wavevectors))
    assert np.max(np.abs(div)) <= 1e-12 * scale


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_drift_matches_finite_difference_of_stream(seed):
    s = synthesize(2, modes=4, seed=seed)
    x = np.random.default_rng(seed).uniform(0, 2 * math.pi, 2)
    np.testing.assert_allclose(eval_drift(drift(s), x), _fd_drift(s, x), atol=1e-8)


def test_drift_divergence_by_finite_differences():
    s = synthesize(3, modes=3, seed=2)
    b = drift(s)
    x, h = np.array([0.4, 1.1, 2.5]), 1e-5
    div = sum((eval_drift(b, x + h * e)[j] - eval_drift(b, x - h * e)[j]) / (2 * h)
              for j, e in enumerate(np.eye(3)))
    assert abs(div) < 1e-8


def test_sampled_fields_match_point_evaluation():
    s = synthesize(2, modes=5, seed=8)
    N = 32
    g = TorusGrid(2, N)
    pts = np.moveaxis(g.points(), 0, -1)
    np.testing.assert_allclose(sample_stream(s, N), np.moveaxis(eval_stream(s, pts), (-2, -1), (0, 1)),
                               atol=1e-13)
    np.testing.assert_allclose(sample_drift(drift(s), N), np.moveaxis(eval_drift(drift(s), pts), -1, 0),
                               atol=1e-13)


def test_sampling_on_scaled_box_with_origin():
    s = synthesize(2, modes=2, seed=1)
    eps, L = 0.5, 4 * math.pi
    N, origin = 64, -L / 2
    H = sample_stream(s, N, box_length=L, scale=eps, origin=origin)
    x = origin + L * np.arange(N) / N
    X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    np.testing.assert_allclose(H[0, 1], eval_stream(s, X / eps)[..., 0, 1], atol=1e-13)


def test_sampling_rejects_unresolved_grid():
    with pytest.raises(ValueError):
        sample_stream(synthesize(2, modes=8, seed=0), 16)


def test_spectral_divergence_on_grid():
    s = synthesize(2, modes=4, seed=3)
    g = TorusGrid(2, 32)
    b = sample_drift(drift(s), 32)
    assert np.max(np.abs(g.divergence(b))) < 1e-12


# ---------------------------------------------------------------- moments

def test_assumption_exponents_reference():
    p0, p0p = assumption_exponents(2, 1.2, 1.4)
    assert p0 == pytest.approx(3.0)
    assert p0p == pytest.approx(8.4 / 3.4)


def test_shear_power_moment_exact():
    # mean of |2 cos x|^12 = 2^12 C(12, 6) / 2^12 = 924
    rep = moment_report(shear(2, amplitude=2.0), q=1.2, alpha=1.4)
    assert rep.r == 12
    assert rep.power_moments[0, 1] == pytest.approx(924.0, rel=1e-12)
    assert rep.sup_divergence == pytest.approx(2.0, rel=1e-12)
    assert rep.passed


def test_fractional_integrand_against_direct_quadrature():
    s = synthesize(2, modes=2, seed=6)
    N, alpha = 16, 1.4
    field = _fractional_integrand_field(s, (0, 1), alpha, N)
    g = TorusGrid(2, N)
    idx = (3, 11)
    x = g.points()[(slice(None),) + idx]

    def integrand(r, t):
        z = r * np.array([math.cos(t), math.sin(t)])
        dH = eval_stream(s, x + z)[0, 1] - eval_stream(s, x)[0, 1]
        return dH ** 2 * r ** (-2 - 2 + alpha) * r

    ref, _ = integrate.dblquad(lambda r, t: integrand(r, t), 0, 2 * math.pi, 0, 1,
                               epsabs=1e-12, epsrel=1e-10)
    assert field[idx] == pytest.approx(ref, rel=1e-8)


def test_moment_report_flags_bad_q():
    rep = moment_report(shear(2), q=0.5, alpha=1.4)
    assert not rep.q_ok
    assert not rep.passed
    assert rep.warnings


def test_moment_report_rows_have_status():
    rows = dict(moment_report(synthesize(2, modes=3, seed=1)).rows())
    assert rows["status"] in ("PASS", "FAIL")
    assert "fractional_moment_12" in rows


# ---------------------------------------------------------------- file format

def test_modes_csv_round_trip(tmp_path):
    s = synthesize(3, modes=2, seed=11)
    p = tmp_path / "modes.csv"
    write_modes_csv(s, p)
    back = read_modes_csv(p)
    np.testing.assert_array_equal(back.modes, s.modes)
    np.testing.assert_array_equal(back.amplitudes, s.amplitudes)
    np.testing.assert_array_equal(back.phases, s.phases)
    assert back.L == s.L and back.seed == 11


def test_modes_csv_with_hash_line(tmp_path):
    s = shear(2, amplitude=2.0)
    p = tmp_path / "m.csv"
    p.write_text(modes_csv_text(s, "abc123"))
    assert p.read_text().splitlines()[0] == "# config_hash=abc123"
    back = read_modes_csv(p)
    np.testing.assert_array_equal(back.amplitudes, s.amplitudes)


def test_read_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_modes_csv(p)
