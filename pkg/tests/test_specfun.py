import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radscat import specfun as sf

mp.mp.dps = 40


def mp_j(m, x):
    return float(mp.besselj(m, x))


def mp_y(m, x):
    return float(mp.bessely(m, x))


def test_j_at_zero():
    assert sf.bessel_j(0, 0.0) == 1.0
    assert sf.bessel_j(1, 0.0) == 0.0
    assert sf.bessel_j(7, 0.0) == 0.0


def test_first_zero_of_j0():
    # located by bisection on the mpmath series, frozen
    z = 2.404825557695773
    assert abs(sf.bessel_j(0, z)) <= 1e-12


def test_y0_at_zero_of_j0_from_wronskian():
    z = float(mp.besseljzero(0, 1))
    _, _, jp, _ = sf.bessel_jy_derivs(0, np.array([z]))
    expected = -2.0 / (np.pi * z * jp[0])
    assert sf.bessel_y(0, z) == pytest.approx(expected, rel=1e-12)


def test_y5_10_against_integral_representation():
    # Y_m(x) = (1/pi) int_0^pi sin(x sin t - m t) dt - (1/pi) int_0^inf (e^{mt} + (-1)^m e^{-mt}) e^{-x sinh t} dt
    m, x = 5, 10.0
    a = mp.quad(lambda t: mp.sin(x * mp.sin(t) - m * t), [0, mp.pi]) / mp.pi
    b = mp.quad(lambda t: (mp.e ** (m * t) + (-1) ** m * mp.e ** (-m * t)) * mp.e ** (-x * mp.sinh(t)),
                [0, 1, 3, 10]) / mp.pi  # integrand below 1e-40000 beyond t = 10
    assert sf.bessel_y(m, x) == pytest.approx(float(a - b), rel=1e-12)


def test_wronskian_j3_at_2():
    p = sf.bessel_pair(3, 2.0)
    assert p.wronskian == pytest.approx(1.0 / np.pi, rel=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 10, 50, 120, 200])
def test_j_y_against_mpmath(m):
    xs = np.geomspace(1e-2, 2e3, 41)
    j, y = sf.bessel_jy(m, xs)
    for xi, ji, yi in zip(xs, j, y):
        jr = mp_j(m, xi)
        # past the turning point J oscillates; near its zeros only absolute
        # accuracy against the envelope sqrt(2 / (pi x)) is meaningful
        envelope = np.sqrt(2 / (np.pi * xi)) if xi > m else 0.0
        if abs(jr) > 1e-300:
            scale = max(abs(jr), envelope)
            assert abs(ji - jr) <= 1e-12 * scale + (1e-300 if abs(jr) < 1e-250 else 0)
        else:
            assert abs(ji) <= 1e-300
        yr = mp.bessely(m, xi)
        if abs(yr) < np.finfo(float).max:
            assert yi == pytest.approx(float(yr), rel=1e-12)
        else:
            assert yi == -np.inf


def test_underflow_is_flushed_to_zero():
    assert sf.bessel_j(200, 0.5) == 0.0
    assert sf.bessel_y(200, 0.5) == -np.inf


def test_argument_validation():
    with pytest.raises(ValueError):
        sf.bessel_j(0, -1.0)
    with pytest.raises(ValueError):
        sf.bessel_j(-1, 1.0)
    with pytest.raises(ValueError):
        sf.bessel_y(0, 0.0)
    with pytest.raises(ValueError):
        sf.bessel_jy(1.5, 1.0)


def test_hankel_is_j_plus_iy():
    h = sf.hankel1(4, np.array([3.0, 30.0]))
    j, y = sf.bessel_jy(4, np.array([3.0, 30.0]))
    assert np.array_equal(h, j + 1j * y)


@settings(max_examples=400, deadline=None)
@given(m=st.integers(0, 200), logx=st.floats(np.log(1e-2), np.log(2e3)))
def test_wronskian_property(m, logx):
    x = float(np.exp(logx))
    pair, _ = sf.bessel_pair_scaled(m, x)
    target = 2.0 / (np.pi * x)
    assert abs(pair.wronskian - target) <= 1e-12 * target


@pytest.mark.parametrize("m,x", [(200, 0.01), (150, 3.0), (120, 0.02)])
def test_scaled_pair_against_mpmath(m, x):
    pair, s = sf.bessel_pair_scaled(m, x)
    assert s < 0
    e = mp.e ** mp.mpf(s)
    assert pair.j == pytest.approx(float(mp.besselj(m, x) / e), rel=1e-12)
    assert pair.y == pytest.approx(float(mp.bessely(m, x) * e), rel=1e-12)
    assert pair.jp == pytest.approx(float(mp.besselj(m, x, 1) / e), rel=1e-12)
    assert pair.yp == pytest.approx(float(mp.bessely(m, x, 1) * e), rel=1e-12)


def test_scaled_pair_is_plain_when_representable():
    pair, s = sf.bessel_pair_scaled(5, 7.0)
    assert s == 0.0
    assert pair == sf.bessel_pair(5, 7.0)


@settings(max_examples=200, deadline=None)
@given(m=st.integers(1, 200), logx=st.floats(np.log(1e-2), np.log(2e3)))
def test_recurrence(m, logx):
    x = float(np.exp(logx))
    jm1 = sf.bessel_j(m - 1, x)
    jm = sf.bessel_j(m, x)
    jp1 = sf.bessel_j(m + 1, x)
    terms = [abs(jm1), abs(jm), abs(jp1)]
    if min(terms) < 1e-250:
        return
    scale = max(abs(jp1), abs(2 * m / x * jm), abs(jm1))
    assert abs(jp1 - (2 * m / x * jm - jm1)) <= 1e-11 * scale


@pytest.mark.parametrize("m", [1, 3, 40])
def test_derivative_identity_against_mpmath(m):
    xs = np.array([0.5, 5.0, 50.0, 500.0])
    _, _, jp, yp = sf.bessel_jy_derivs(m, xs)
    for xi, a, b in zip(xs, jp, yp):
        ref = float(mp.besselj(m, xi, 1))
        if abs(ref) > 1e-250:
            assert a == pytest.approx(ref, rel=1e-12, abs=1e-15 * abs(mp_j(m - 1, xi)))
        assert b == pytest.approx(float(mp.bessely(m, xi, 1)), rel=1e-12)


def test_scan_max_examples():
    assert sf.bessel_j_scan_max(0, 0.0, 0.1) == pytest.approx(1.0, abs=1e-10)
    assert sf.bessel_j_scan_max(10, 0.0, 1.0) < 1e-9
    # |J_0| on [2, 4] peaks at the first zero of J_1, where J_0 has its minimum
    assert sf.bessel_j_scan_max(0, 2.0, 4.0, n=2000) == pytest.approx(abs(mp_j(0, mp.besseljzero(1, 1))), rel=1e-6)
    with pytest.raises(ValueError):
        sf.bessel_j_scan_max(0, 2.0, 1.0)


def test_hankel_scan_max_includes_endpoints():
    v = sf.hankel_scan_max(2, 1.0, 2.0)
    assert v == pytest.approx(abs(complex(mp.hankel1(2, 1.0))), rel=1e-13)


def test_all_orders_against_single_order():
    xs = np.array([0.3, 4.0, 37.0, 150.0])
    J, Y = sf.bessel_jy_orders(180, xs)
    for m in (0, 1, 17, 64, 90, 180):
        j, y = sf.bessel_jy(m, xs)
        ok = np.abs(j) > 1e-240
        assert np.allclose(J[m][ok], j[ok], rtol=1e-12, atol=0)
        fin = np.isfinite(y)
        assert np.allclose(Y[m][fin], y[fin], rtol=1e-12, atol=0)


def test_thread_safety_is_pure():
    from concurrent.futures import ThreadPoolExecutor

    xs = np.linspace(0.1, 100, 200)
    ref = sf.bessel_jy(9, xs)
    with ThreadPoolExecutor(4) as ex:
        outs = list(ex.map(lambda _: sf.bessel_jy(9, xs), range(8)))
    for j, y in outs:
        assert np.array_equal(j, ref[0]) and np.array_equal(y, ref[1])
