import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catspec.phasespace import (
    ION_MASS_40CA,
    DisplacementRecord,
    InvalidParameterError,
    ModeSpec,
    as_phase_point,
    cat_size,
    chain,
    compose,
    join,
    lamb_dicke,
    mean_phonon_number,
    shoelace_area,
)

coord = st.floats(-5, 5, allow_nan=False)
points = st.builds(complex, coord, coord)


def test_out_and_back_encloses_nothing():
    rec = compose(1.3 - 0.4j, -(1.3 - 0.4j))
    assert rec.net == 0
    assert rec.geo_phase == 0


def test_single_composition_phase():
    assert compose(1, 1j).geo_phase == pytest.approx(1.0)


def test_rectangle_phase_is_twice_area():
    a, b = 0.7, 1.9
    rec = chain([a, 1j * b, -a, -1j * b])
    assert abs(rec.net) < 1e-15
    assert rec.geo_phase == pytest.approx(2 * a * b, abs=1e-14)


@given(points, points, points)
def test_composition_associative(d1, d2, d3):
    left = join(chain([d1, d2]), chain([d3]))
    right = join(chain([d1]), chain([d2, d3]))
    assert abs(left.net - right.net) < 1e-12
    assert abs(left.geo_phase - right.geo_phase) < 1e-12


@given(st.lists(points, min_size=2, max_size=12))
def test_closed_path_phase_matches_shoelace(steps):
    steps = steps + [-sum(steps)]
    rec = chain(steps)
    vertices = np.cumsum([0] + steps[:-1])
    assert abs(rec.net) < 1e-9
    assert rec.geo_phase == pytest.approx(2 * shoelace_area(vertices), abs=1e-9)


def test_then_matches_compose():
    rec = DisplacementRecord().then(0.5).then(0.2j)
    assert rec == compose(0.5, 0.2j)


def test_non_finite_point_rejected():
    with pytest.raises(InvalidParameterError):
        as_phase_point(complex(math.inf, 0))


def test_zero_participation_gives_zero_eta():
    assert lamb_dicke(729e-9, ModeSpec(participation=0.0)) == 0.0


def test_lamb_dicke_729nm():
    full = ModeSpec(participation=1.0, ion_mass=ION_MASS_40CA)
    assert lamb_dicke(729e-9, full) == pytest.approx(0.0885, abs=5e-4)
    assert lamb_dicke(729e-9, ModeSpec()) == pytest.approx(0.0611, abs=1e-4)


@given(st.floats(200e-9, 2e-6), st.floats(0.1e6, 10e6), st.floats(1.1, 4))
def test_lamb_dicke_scaling(wl, nu, k):
    base = lamb_dicke(wl, ModeSpec(frequency=nu))
    assert lamb_dicke(k * wl, ModeSpec(frequency=nu)) == pytest.approx(base / k, rel=1e-12)
    assert lamb_dicke(wl, ModeSpec(frequency=k * nu)) == pytest.approx(base / math.sqrt(k), rel=1e-12)
    heavy = ModeSpec(frequency=nu, ion_mass=2 * ION_MASS_40CA)
    assert lamb_dicke(wl, heavy) == pytest.approx(base / math.sqrt(2), rel=1e-12)


def test_cat_size():
    assert cat_size(0.0611, 2 * math.pi * 300e3, 0.0) == 0.0
    alpha = cat_size(0.0611, 2 * math.pi * 300e3, 50e-6)
    assert alpha == pytest.approx(2.88, abs=0.01)
    assert mean_phonon_number(alpha) == pytest.approx(8.3, abs=0.05)


@pytest.mark.parametrize("kw", [{"frequency": 0}, {"ion_mass": -1}, {"participation": 1.5}])
def test_mode_spec_validation(kw):
    with pytest.raises(InvalidParameterError):
        ModeSpec(**kw)


def test_negative_cat_inputs_rejected():
    with pytest.raises(InvalidParameterError):
        cat_size(-0.1, 1.0, 1.0)
