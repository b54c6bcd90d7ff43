import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catspec.fitting import WeightedSeries, fit_gaussian
from catspec.lineprofile import (
    DriveParams,
    SpectralModel,
    calibrate_saturation,
    excitation_profile,
    photon_number_distribution,
    power_series,
    profile_fwhm,
    scatter_probability,
    spectrum_scan,
    zeeman_components,
)
from catspec.montecarlo import RngStream
from catspec.phasespace import InvalidParameterError
from catspec.signal import ProtocolParams, sigma_y_peak

MODEL = SpectralModel()
ZERO_FIELD = SpectralModel(b_field=0.0)
DEFAULTS = ProtocolParams()


def test_zero_field_single_component():
    assert zeeman_components(ZERO_FIELD) == [(0.0, 1.0)]


def test_components_at_4p1_gauss():
    comps = zeeman_components(MODEL)
    assert len(comps) == 6
    assert sum(w for _, w in comps) == pytest.approx(1.0)
    shifts = sorted(s for s, _ in comps)
    # (g_u m_u - g_l m_l) mu_B B / h with the extreme lines at -/+ (1/3 - 6/5)
    assert shifts[-1] == pytest.approx((0.8 * 1.5 - 2 / 3 * 0.5) * 1.39962e6 * 4.1, rel=1e-5)
    assert shifts[-1] == pytest.approx(4.97e6, abs=0.01e6)


def test_weights_symmetric_under_reflection():
    comps = dict(zeeman_components(MODEL))
    for shift, w in comps.items():
        mirror = min(comps, key=lambda s: abs(s + shift))
        assert abs(mirror + shift) < 1e-6
        assert comps[mirror] == pytest.approx(w)


def test_profile_normalisation_and_half_width():
    assert excitation_profile(ZERO_FIELD, 0.0) == pytest.approx(1.0)
    assert excitation_profile(ZERO_FIELD, 11.2e6) == pytest.approx(0.5)
    assert excitation_profile(ZERO_FIELD, -11.2e6) == pytest.approx(0.5)
    assert profile_fwhm(ZERO_FIELD) == pytest.approx(22.4e6, rel=1e-9)


def test_zeeman_broadened_width_frozen():
    assert profile_fwhm(MODEL) > 22.4e6
    assert profile_fwhm(MODEL) == pytest.approx(26.272e6, rel=1e-4)


@given(st.floats(-100e6, 100e6))
def test_profile_even(d):
    assert excitation_profile(MODEL, d) == pytest.approx(excitation_profile(MODEL, -d), rel=1e-12)


def test_scatter_probability_limits():
    assert scatter_probability(MODEL, DriveParams(power=0.0), 0.0) == 0.0
    strong = DriveParams(power=1.0, duration=1e-6, saturation_scale=1e9)
    assert scatter_probability(MODEL, strong, 0.0) == pytest.approx(1.0)


def test_half_max_drive_ratio():
    kappa = calibrate_saturation(ZERO_FIELD, 1.0, 1e-6, 0.5)
    drive = DriveParams(1.0, 1e-6, kappa)
    p0 = scatter_probability(ZERO_FIELD, drive, 0.0)
    p_half = scatter_probability(ZERO_FIELD, drive, 11.2e6)
    assert p0 == pytest.approx(0.5)
    assert p_half / p0 == pytest.approx((1 - math.exp(-math.log(2) / 2)) / 0.5, rel=1e-9)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(-50e6, 50e6))
def test_scatter_probability_monotone(p1, p2, d):
    lo, hi = sorted((p1, p2))
    a = scatter_probability(MODEL, DriveParams(lo, 1e-6, 1e6), d)
    b = scatter_probability(MODEL, DriveParams(hi, 1e-6, 1e6), d)
    assert a <= b + 1e-15


def test_photon_numbers():
    assert photon_number_distribution(1.0).pmf(1) == 1.0
    g = photon_number_distribution(0.936)
    assert g.pmf(1) == pytest.approx(0.936)
    assert g.sf(1) == pytest.approx(0.064)
    assert g.mean() == pytest.approx(1.068, abs=1e-3)
    with pytest.raises(InvalidParameterError):
        photon_number_distribution(0.0)


def test_far_detuned_and_pump_out_limits():
    drive = DriveParams(1.0, 1e-6, 1e12)
    scan = spectrum_scan(MODEL, drive, DEFAULTS, [0.0, 10 * 22.4e6])
    _, amp = sigma_y_peak(DEFAULTS)
    assert scan.a_y[0] == pytest.approx(amp, rel=1e-9)
    weak = spectrum_scan(MODEL, power_series(MODEL)[0], DEFAULTS, [10 * 22.4e6])
    assert weak.a_y[0] < 0.01 * amp


def test_power_broadening_order():
    grid = np.linspace(-60e6, 60e6, 41)
    widths = []
    for drive in power_series(MODEL):
        scan = spectrum_scan(MODEL, drive, DEFAULTS, grid)
        widths.append(fit_gaussian(WeightedSeries(grid / 1e6, scan.a_y, 1e-3)).extras["fwhm"])
    assert widths[0] < widths[1] < widths[2]


def test_shot_sampled_scan_is_reproducible():
    drive = power_series(MODEL)[0]
    grid = np.linspace(-30e6, 30e6, 5)
    a = spectrum_scan(MODEL, drive, DEFAULTS, grid, shots=500, rng=RngStream(4))
    b = spectrum_scan(MODEL, drive, DEFAULTS, grid, shots=500, rng=RngStream(4))
    np.testing.assert_array_equal(a.a_y, b.a_y)
    assert np.all(a.a_y_err > 0)
    with pytest.raises(InvalidParameterError):
        spectrum_scan(MODEL, drive, DEFAULTS, grid, shots=10)


def test_validation():
    with pytest.raises(InvalidParameterError):
        SpectralModel(natural_fwhm=0.0)
    with pytest.raises(InvalidParameterError):
        DriveParams(power=-1.0)
    with pytest.raises(InvalidParameterError):
        spectrum_scan(MODEL, DriveParams(), DEFAULTS, [])
