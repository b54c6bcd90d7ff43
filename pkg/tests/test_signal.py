import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catspec.phasespace import InvalidParameterError
from catspec.signal import (
    ProtocolParams,
    default_recoil_etas,
    detection_probability,
    expectation,
    fringe_amplitudes,
    fringe_arrays,
    fringe_curve,
    heating_contrast,
    heating_variance,
    max_detection_probability,
    phi_abs,
    sigma_y_peak,
    sigma_z_extrema,
    sinc,
)

DEFAULTS = ProtocolParams()
COLD = ProtocolParams(heating_rate=0.0)


def test_phi_abs_values():
    p = ProtocolParams(alpha=2.9, eta_abs=0.1)
    assert phi_abs(p, 0.0) == 0.0
    assert phi_abs(p, math.pi / 2) == pytest.approx(0.58)
    assert phi_abs(p, 0.3) == pytest.approx(-phi_abs(p, 0.3 + math.pi))


def test_sinc_values():
    assert sinc(0.0) == 1.0
    assert abs(sinc(math.pi)) < 1e-15
    assert sinc(2.0) == pytest.approx(0.4546, abs=1e-4)


@given(st.floats(-2e-4, 2e-4))
def test_sinc_series_matches_direct(x):
    if x == 0:
        return
    assert sinc(x) == pytest.approx(math.sin(x) / x, rel=1e-15, abs=0)


def test_sinc_array():
    out = sinc(np.array([0.0, 1e-6, 1.0]))
    assert out.shape == (3,)
    assert out[0] == 1.0


def test_heating_contrast():
    assert heating_contrast(COLD) == 1.0
    assert heating_variance(DEFAULTS) == pytest.approx(0.1735, abs=2e-4)
    assert heating_contrast(DEFAULTS) == pytest.approx(0.917, abs=1e-3)
    assert heating_contrast(DEFAULTS.replace(tau_wait=64e-6)) == pytest.approx(0.878, abs=1e-3)


def test_no_scatter_returns_down():
    e = expectation(COLD, 0.7, scattered=False)
    assert e == (-1.0, 0.0)


def test_no_cat_no_signal():
    p = COLD.replace(alpha=0.0)
    e = expectation(p, np.linspace(0, 2 * math.pi, 9))
    np.testing.assert_allclose(e.sz, -1.0)
    np.testing.assert_allclose(e.sy, 0.0, atol=0)


def test_zero_absorption_recoil_gives_flat_sigma_y():
    _, _, sy = fringe_arrays(DEFAULTS.replace(eta_abs=0.0), np.linspace(0, 2 * math.pi, 33))
    assert np.all(sy == 0.0)


def test_fringe_symmetries():
    phi = np.linspace(0, 2 * math.pi, 50)
    a = expectation(DEFAULTS, phi)
    b = expectation(DEFAULTS, phi + math.pi)
    c = expectation(DEFAULTS, -phi)
    np.testing.assert_allclose(a.sz, b.sz, atol=1e-12)
    np.testing.assert_allclose(a.sy, -c.sy, atol=1e-15)


def test_fixed_direction_form():
    phi = 1.1
    for c in (-1.0, 0.0, 0.4, 1.0):
        e = expectation(DEFAULTS, phi, cos_theta=c)
        total = 2 * DEFAULTS.alpha * math.sin(phi) * (DEFAULTS.eta_abs + DEFAULTS.eta_em * c)
        assert e.sz == pytest.approx(-math.cos(total) * heating_contrast(DEFAULTS), abs=1e-15)
        assert e.sy == pytest.approx(math.sin(total) * heating_contrast(DEFAULTS), abs=1e-15)


def test_isotropic_average_is_quadrature_of_fixed_direction():
    x, w = np.polynomial.legendre.leggauss(64)
    for phi in (0.3, 1.2, 2.0):
        sz = sum(0.5 * wi * expectation(DEFAULTS, phi, cos_theta=c).sz for c, wi in zip(x, w))
        assert sz == pytest.approx(expectation(DEFAULTS, phi).sz, abs=1e-13)


@given(st.floats(0.2, 5.0), st.floats(0.0, 2 * math.pi))
def test_only_alpha_eta_products_matter(k, phi):
    # heating depends on alpha alone, so compare without it
    scaled = COLD.replace(alpha=COLD.alpha / k, eta_abs=COLD.eta_abs * k, eta_em=COLD.eta_em * k)
    a, b = expectation(COLD, phi), expectation(scaled, phi)
    assert a.sz == pytest.approx(b.sz, abs=1e-12)
    assert a.sy == pytest.approx(b.sy, abs=1e-12)


@given(st.floats(0.0, 2 * math.pi))
def test_bloch_vector_bounded_by_contrast(phi):
    e = expectation(DEFAULTS, phi)
    c = heating_contrast(DEFAULTS)
    assert e.sz ** 2 + e.sy ** 2 <= c * c * (1 + 1e-12)


def test_bloch_vector_on_sphere_without_emission():
    p = DEFAULTS.replace(eta_em=0.0)
    e = expectation(p, np.linspace(0, 6, 20))
    np.testing.assert_allclose(e.sz ** 2 + e.sy ** 2, heating_contrast(p) ** 2, rtol=1e-12)


def test_fringe_curve_and_empty_grid():
    curve = fringe_curve(DEFAULTS, [0.0, 1.0])
    assert curve[0][0] == 0.0 and curve[0][1].sz == pytest.approx(-heating_contrast(DEFAULTS))
    with pytest.raises(InvalidParameterError):
        fringe_curve(DEFAULTS, [])


def test_sigma_y_peak_with_synthetic_etas():
    # etas chosen so that max sin(phi_abs) sinc(phi_em) is about 0.589
    p = DEFAULTS.replace(eta_abs=0.2, eta_em=0.16)
    phi, amp = sigma_y_peak(p)
    assert phi == pytest.approx(math.pi / 2, abs=1e-6)
    inner = amp / heating_contrast(p)
    assert inner == pytest.approx(math.sin(2 * p.alpha * 0.2) * sinc(2 * p.alpha * 0.16), abs=1e-10)


def test_default_model_amplitudes_frozen():
    # frozen reference values of the default configuration
    phi, amp = sigma_y_peak(DEFAULTS)
    assert amp == pytest.approx(0.318132, abs=1e-6)
    lo, hi = sigma_z_extrema(DEFAULTS)
    assert lo == pytest.approx(-0.916948, abs=1e-6)
    assert hi == pytest.approx(-0.733915, abs=1e-6)
    ay, az = fringe_amplitudes(DEFAULTS)
    assert ay == pytest.approx(0.331951, abs=1e-6)
    assert az == pytest.approx(0.091498, abs=1e-6)


def test_default_etas():
    ea, ee = default_recoil_etas()
    assert ea == pytest.approx(0.071011, abs=1e-6)
    assert ee == pytest.approx(0.154998, abs=1e-6)
    assert ee / ea == pytest.approx(866.452 / 396.959, rel=1e-12)


def test_detection_probability():
    assert detection_probability(0.0, 1.0) == 0.0
    assert float(detection_probability(math.pi, 1e-12)) == pytest.approx(1.0)
    assert max_detection_probability(1.0) == pytest.approx(0.6086, abs=2e-4)
    assert max_detection_probability(1e-9) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InvalidParameterError):
        max_detection_probability(0.0)


@pytest.mark.parametrize("field", ["alpha", "eta_abs", "heating_rate", "tau_cat"])
def test_protocol_validation(field):
    with pytest.raises(InvalidParameterError):
        ProtocolParams(**{field: -1.0})
