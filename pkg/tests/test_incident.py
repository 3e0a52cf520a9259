import numpy as np
import pytest
from scipy import special as sp

from radscat import incident as inc


def test_plane_wave_direction_and_modes():
    pw = inc.plane_wave(3.0)
    assert pw(1.0, 0.0) == pytest.approx(np.exp(1.5j), rel=1e-15)
    # Jacobi-Anger: e^{ikr cos(theta - a)} = sum i^m J_m(kr) e^{im(theta - a)}
    r, th = 0.8, 0.3
    m_all = np.arange(-40, 41)
    series = np.sum(pw.modes(m_all) * sp.jv(np.abs(m_all), 2.4) * np.exp(1j * m_all * th)) / (2 * np.pi)
    assert series == pytest.approx(pw(r * np.cos(th), r * np.sin(th)), rel=1e-14)


def test_mode_coefficient_normalization():
    # a pure mode J_5(kr) e^{5i theta} has c_5 = 2 pi under the unnormalized transform
    k = 2.0
    f = inc.from_function(lambda x, y: sp.jv(5, k * np.hypot(x, y)) * np.exp(5j * np.arctan2(y, x)), k)
    modes = inc.ring_modes(f, 1.0, 1e-13, n0=256)
    assert modes.M == 5
    assert modes.coeff(5) == pytest.approx(2 * np.pi, rel=1e-12)
    assert abs(modes.coeff(4)) < 1e-12


def test_truncation_order_rule():
    u_hat = np.zeros(64, complex)
    u_hat[3] = 1.0
    u_hat[-7] = 1e-3
    assert inc.truncation_order(u_hat, 1e-2) == 3
    assert inc.truncation_order(u_hat, 1e-4) == 7
    u_hat[20] = 1.0
    assert inc.truncation_order(u_hat, 1e-4) is None


def test_ring_modes_plane_wave_counts():
    R = 2 * np.pi
    assert abs(inc.ring_modes(inc.plane_wave(30.0), R, 1e-13).M - 245) <= 0.05 * 245
    small = inc.ring_modes(inc.plane_wave(1.0), R, 1e-13)
    assert small.count == 2 * small.M + 1


def test_ring_modes_doubles_until_resolved():
    # 500 samples cannot hold the ~1425 modes of a k = 100 plane wave
    modes = inc.ring_modes(inc.plane_wave(100.0), 2 * np.pi, 1e-13, n0=500)
    assert modes.n_samples > 500
    assert modes.M == inc.ring_modes(inc.plane_wave(100.0), 2 * np.pi, 1e-13).M
    assert 2 * modes.M + 1 <= modes.n_samples // 2


def test_fitted_coefficients_match_analytic():
    ps = inc.point_source(5.0, (10.0, 10.0), 0.7 - 0.2j)
    R = 2 * np.pi
    exact = inc.ring_modes(ps, R, 1e-13)
    fit = inc.ring_modes(ps, R, 1e-13, use_analytic=False)
    assert exact.M == fit.M
    # compare the mode contributions on the ring, where J is not tiny
    j = np.array([sp.jv(abs(m), 5.0 * R) for m in exact.orders])
    err = np.abs((exact.coeffs - fit.coeffs) * j)
    assert np.max(err) <= 1e-12 * np.max(np.abs(exact.coeffs * j))


def test_ring_reconstruction():
    pw = inc.plane_wave(10.0, 0.4)
    R = 2.0
    modes = inc.ring_modes(pw, R, 1e-13)
    th = np.linspace(0, 2 * np.pi, 17)
    rec = inc.ring_reconstruct(modes, 10.0, R, th)
    assert np.max(np.abs(rec - pw(R * np.cos(th), R * np.sin(th)))) < 1e-12


def test_point_source_is_green_function():
    k = 3.0
    ps = inc.point_source(k, (1.0, -2.0), 2.0)
    # flux of grad u through a small circle equals the source amplitude
    eps_r, h = 1e-3, 1e-6
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    x0, y0 = 1.0, -2.0
    ur = (ps(x0 + (eps_r + h) * np.cos(th), y0 + (eps_r + h) * np.sin(th))
          - ps(x0 + (eps_r - h) * np.cos(th), y0 + (eps_r - h) * np.sin(th))) / (2 * h)
    flux = np.mean(ur) * 2 * np.pi * eps_r
    assert flux == pytest.approx(2.0, rel=1e-4)
    # free Helmholtz away from the source (5-point stencil)
    x, y, d = 4.0, 1.0, 1e-3
    lap = (ps(x + d, y) + ps(x - d, y) + ps(x, y + d) + ps(x, y - d) - 4 * ps(x, y)) / d**2
    assert abs(lap + k * k * ps(x, y)) < 1e-5 * abs(k * k * ps(x, y))
    with pytest.raises(ValueError):
        ps(1.0, -2.0)


def test_point_source_modes_graf():
    k = 2.0
    ps = inc.point_source(k, (10.0, 10.0))
    r, th = 1.5, 0.7
    m = np.arange(-60, 61)
    series = np.sum(ps.modes(m) * sp.jv(np.abs(m), k * r) * np.exp(1j * m * th)) / (2 * np.pi)
    assert series == pytest.approx(ps(r * np.cos(th), r * np.sin(th)), rel=1e-13)


def test_point_source_outside_support():
    with pytest.raises(ValueError):
        inc.point_source_incident(1.0, (1.0, 1.0), 1.0)


def test_gaussian_beam():
    gb = inc.gaussian_beam(30.0)
    assert np.isfinite(gb(0.0, 0.0))
    # solves the free Helmholtz equation near the scatterer
    x, y, d = 0.5, 0.3, 1e-3
    lap = (gb(x + d, y) + gb(x - d, y) + gb(x, y + d) + gb(x, y - d) - 4 * gb(x, y)) / d**2
    assert abs(lap + 900 * gb(x, y)) < 1e-3 * abs(900 * gb(x, y))
    with pytest.raises(ValueError):
        gb(-16.0, 0.0)


def test_gaussian_beam_mode_count():
    modes = inc.ring_modes(inc.gaussian_beam(30.0), 2 * np.pi, 1e-13)
    assert 180 <= modes.M <= 245


def test_invalid_wavenumber():
    with pytest.raises(ValueError):
        inc.plane_wave(0.0)
    with pytest.raises(ValueError):
        inc.by_name("laser", 1.0)
