import math

import numpy as np
import pytest

from catspec.montecarlo import (
    RngStream,
    WalkProfile,
    emission_average,
    gaussian_contrast_check,
    heating_walk,
    heating_walks,
    simulate_protocol,
    walk_variance,
)
from catspec.phasespace import InvalidParameterError
from catspec.signal import ProtocolParams, expectation, heating_variance, sinc

DEFAULTS = ProtocolParams()


def test_stream_reproducible_and_distinct():
    a = RngStream(5, 2).generator().random(4)
    b = RngStream(5, 2).generator().random(4)
    c = RngStream(5, 3).generator().random(4)
    d = RngStream(5, 2).child(0).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_rejects_bad_seed():
    with pytest.raises(InvalidParameterError):
        RngStream(-1)


def test_frozen_first_draws():
    # PCG64 via SeedSequence is stable across numpy releases and platforms
    x = RngStream(2024, 0).generator().random(2)
    np.testing.assert_allclose(x, [0.65056957, 0.52957012], atol=5e-9)


def test_emission_average_zero_phase():
    mean, se = emission_average(0.0, 1000, RngStream(1))
    assert mean == 1.0 and se == 0.0


@pytest.mark.parametrize("phi", [2.0, math.pi])
def test_emission_average_matches_sinc(phi):
    mean, se = emission_average(phi, 100_000, RngStream(11, int(phi * 100)))
    assert abs(mean - sinc(phi)) < 3 * se


def test_no_heating_no_phase():
    prof = WalkProfile("triangle", tau_cat=50e-6, n_cat=8.3)
    assert heating_walk(prof, 0.0, RngStream(1)) == 0.0
    assert np.all(heating_walks(prof, 0.0, 10, RngStream(1)) == 0.0)


def test_profile_grid_and_variance_laws():
    tri = WalkProfile("triangle", tau_cat=50e-6, tau_wait=32e-6, n_cat=8.3, steps=200)
    amps, dt = tri.grid()
    assert amps.size == 400 and dt.sum() == pytest.approx(100e-6)
    assert tri.analytic_variance(40) == pytest.approx(16 / 3 * 40 * 50e-6 * 8.3)
    trap = WalkProfile("trapezoid", tau_cat=50e-6, tau_wait=32e-6, n_cat=8.3)
    assert trap.analytic_variance(40) == pytest.approx(heating_variance(DEFAULTS), rel=1e-3)
    assert trap.duration == pytest.approx(132e-6)
    with pytest.raises(InvalidParameterError):
        WalkProfile("circle")


def test_walk_variance_triangle():
    prof = WalkProfile("triangle", tau_cat=50e-6, n_cat=8.3)
    est = walk_variance(prof, 40.0, 4000, RngStream(3))
    assert abs(est.variance - est.analytic) < 3 * est.std_error


def test_walk_discretisation_bias_small():
    # the walk sum is unbiased at any step count; doubling steps changes the
    # analytic target by nothing and the sampled variance by noise only
    base = WalkProfile("trapezoid", steps=1000)
    fine = WalkProfile("trapezoid", steps=2000)
    a, dt = base.grid()
    exact = 8 * 40 * np.sum(np.abs(a) ** 2 * dt)
    assert exact == pytest.approx(base.analytic_variance(40), rel=1e-2)
    a2, dt2 = fine.grid()
    exact2 = 8 * 40 * np.sum(np.abs(a2) ** 2 * dt2)
    assert abs(exact2 - fine.analytic_variance(40)) < abs(exact - base.analytic_variance(40))


def test_walk_skewness_near_zero():
    est = walk_variance(WalkProfile(), 40.0, 4000, RngStream(8))
    # standard error of sample skewness is about sqrt(6 / n)
    assert abs(est.skewness) < 4 * math.sqrt(6 / 4000)


def test_walks_independent_of_worker_count():
    prof = WalkProfile(steps=200)
    a = heating_walks(prof, 40.0, 1200, RngStream(4), workers=1)
    b = heating_walks(prof, 40.0, 1200, RngStream(4), workers=3)
    assert np.array_equal(a, b)


def test_batched_runs_need_stream():
    with pytest.raises(TypeError):
        heating_walks(WalkProfile(), 40.0, 10, np.random.default_rng(1))


def test_gaussian_contrast():
    c = gaussian_contrast_check(0.0, 100, RngStream(1))
    assert c.mc_mean_cos == 1.0 and c.analytic == 1.0
    c = gaussian_contrast_check(1.0, 100_000, RngStream(2))
    assert c.analytic == pytest.approx(0.6065, abs=1e-4)
    assert abs(c.mc_mean_cos - c.analytic) < 3 * c.std_error
    c = gaussian_contrast_check(0.1735, 10, RngStream(2))
    assert c.analytic == pytest.approx(0.917, abs=1e-3)


def test_protocol_without_scatter():
    est = simulate_protocol(ProtocolParams(heating_rate=0.0), 0.4, 2000, 0.0, RngStream(1))
    assert est.sz == -1.0 and est.sz_err == 0.0
    assert abs(est.sy) < 4 * 1 / math.sqrt(2000)


def test_protocol_4200_shots_within_3_sigma():
    phi = math.pi / 2
    est = simulate_protocol(DEFAULTS, phi, 4200, 1.0, RngStream(42))
    ref = expectation(DEFAULTS, phi)
    assert abs(est.sy - ref.sy) < 3 * est.sy_err
    assert abs(est.sz - ref.sz) < 3 * est.sz_err


@pytest.mark.slow
def test_protocol_estimator_unbiased_at_1e6():
    phi = 0.9
    est = simulate_protocol(DEFAULTS, phi, 1_000_000, 1.0, RngStream(99), workers=4)
    ref = expectation(DEFAULTS, phi)
    assert abs(est.sy - ref.sy) < 4 * est.sy_err
    assert abs(est.sz - ref.sz) < 4 * est.sz_err


def test_protocol_deterministic_across_workers():
    a = simulate_protocol(DEFAULTS, 1.0, 150_000, 0.7, RngStream(5), workers=1)
    b = simulate_protocol(DEFAULTS, 1.0, 150_000, 0.7, RngStream(5), workers=4)
    assert a == b


@pytest.mark.parametrize("kw", [{"shots": 0}, {"scatter_prob": 1.5}])
def test_protocol_validation(kw):
    args = {"shots": 10, "scatter_prob": 1.0} | kw
    with pytest.raises(InvalidParameterError):
        simulate_protocol(DEFAULTS, 0.0, args["shots"], args["scatter_prob"], RngStream(1))
