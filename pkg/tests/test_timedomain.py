import numpy as np
import pytest
from scipy.integrate import quad

from radscat import timedomain as td
from radscat.checks import free_space_pulse
from radscat.potentials import luneburg_lens, zero_potential

SPEC = td.gaussian_pulse_spectrum()
# points on or near the disk r <= 2 pi, at times after the pulse arrives
ORACLE_POINTS = [(0.0, 0.0, 26.0), (3.0, -2.0, 25.0), (-4.0, 1.0, 30.0), (2.0, 5.0, 20.0),
                 (-1.0, -6.0, 33.0)]


@pytest.fixture(scope="module")
def free_sweeps():
    x = np.array([p[0] for p in ORACLE_POINTS])
    y = np.array([p[1] for p in ORACLE_POINTS])
    graded = td.build_sweep(SPEC, zero_potential(), x, y, td.frequency_rule())
    flat = td.build_sweep(SPEC, zero_potential(), x, y, td.frequency_rule(graded=False))
    return graded, flat


def test_spectrum_matches_forward_transform():
    ks = np.linspace(-16, 16, 20)
    for k in ks:
        re = quad(SPEC.profile, 0, 20, weight="cos", wvar=k, limit=200, epsabs=1e-14)[0]
        im = quad(SPEC.profile, 0, 20, weight="sin", wvar=k, limit=200, epsabs=1e-14)[0]
        val = (re + 1j * im) / (2 * np.pi)
        assert abs(SPEC(k) - val) <= 1e-12 * abs(SPEC(0.0))


def test_spectrum_symmetry_and_band():
    ks = np.linspace(0.1, 16, 9)
    assert np.array_equal(SPEC(-ks), np.conj(SPEC(ks)))
    assert SPEC.band_ratio == pytest.approx(np.exp(-16.0), rel=1e-15)
    assert abs(SPEC(16.0)) / abs(SPEC(0.0)) == pytest.approx(np.exp(-16.0), rel=1e-12)
    with pytest.raises(ValueError):
        td.gaussian_pulse_spectrum(rate=0.0)


def test_frequency_rule_layout():
    rule = td.frequency_rule()
    assert rule.size == 400 + 64 + 32 + 11 * 16 + 16
    assert np.all(rule.nodes > 0) and np.all(rule.nodes <= 16)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.count_nonzero(rule.labels == 0) == 400
    assert np.count_nonzero(rule.labels == 1) == 64
    assert np.sum(rule.weights) == pytest.approx(16.0, rel=1e-14)
    # log k integrand near 0 is handled by the graded panels
    assert np.sum(rule.weights * np.log(rule.nodes)) == pytest.approx(16 * np.log(16) - 16, rel=1e-13)
    assert td.frequency_rule(refine=2).size == 2 * rule.size


def test_transform_round_trip():
    rule = td.frequency_rule()
    sweep = td.FrequencySweep(rule, SPEC, np.zeros(1), np.zeros(1), SPEC(rule.nodes)[:, None],
                              np.zeros(rule.size, int))
    times = np.linspace(5, 15, 11)
    frames = td.synthesize(sweep, times)
    assert np.max(np.abs(frames.values[:, 0] - SPEC.profile(times))) < 1e-6 * np.sqrt(8)
    assert np.all(frames.imag_residue == 0.0)


def test_free_space_matches_convolution_oracle(free_sweeps):
    graded, _ = free_sweeps
    times = [p[2] for p in ORACLE_POINTS]
    frames = td.synthesize(graded, times)
    got = np.diag(frames.values)
    ref = np.array([free_space_pulse(SPEC, *p) for p in ORACLE_POINTS])
    assert np.max(np.abs(got - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_grading_near_zero_matters(free_sweeps):
    graded, flat = free_sweeps
    times = [p[2] for p in ORACLE_POINTS]
    ref = np.array([free_space_pulse(SPEC, *p) for p in ORACLE_POINTS])
    err_g = np.max(np.abs(np.diag(td.synthesize(graded, times).values) - ref))
    err_f = np.max(np.abs(np.diag(td.synthesize(flat, times).values) - ref))
    assert err_f > 100 * err_g


def test_linearity_in_amplitude():
    x, y = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    rule = td.frequency_rule(n_main=20, levels=3, n_panel=4, low_density=0, n_inner=4)
    s2 = td.gaussian_pulse_spectrum(amplitude=3 * np.sqrt(8.0))
    a = td.synthesize(td.build_sweep(SPEC, zero_potential(), x, y, rule), [20.0, 25.0]).values
    b = td.synthesize(td.build_sweep(s2, zero_potential(), x, y, rule), [20.0, 25.0]).values
    assert np.max(np.abs(b - 3 * a)) <= 1e-14 * np.max(np.abs(b))


def test_arrival_cutoff():
    assert td.arrival_cutoff(SPEC, 2 * np.pi) == pytest.approx(10 + np.sqrt(200) - 2 * np.pi - 2.5)


def test_source_inside_support_rejected():
    near = td.gaussian_pulse_spectrum(location=(1.0, 1.0))
    with pytest.raises(ValueError):
        td.build_sweep(near, luneburg_lens(), [0.0], [0.0])


def test_small_luneburg_sweep_runs():
    rule = td.frequency_rule(n_main=4, levels=1, n_panel=2, low_density=0, n_inner=2)
    sw = td.build_sweep(SPEC, luneburg_lens(), [0.0, 1.0], [0.0, 2.0], rule)
    assert sw.values.shape == (rule.size, 2)
    assert np.all(np.isfinite(sw.values))
    assert np.all(sw.mode_counts > 0)
