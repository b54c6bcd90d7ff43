import cmath
import math

import numpy as np
import pytest

from catspec.fock_oracle import (
    TruncationError,
    analytic_cat_state,
    cat_unitary,
    direct_detection_exact,
    displacement_matrix,
    initial_state,
    oracle_deviation,
    phase_sensitive_exact,
    qubit_expectation,
    run_protocol_averaged,
    run_protocol_exact,
)
from catspec.signal import ProtocolParams, expectation

COLD = ProtocolParams(heating_rate=0.0)


def test_zero_displacement_is_identity():
    np.testing.assert_allclose(displacement_matrix(0, 32), np.eye(32), atol=1e-15)
    np.testing.assert_allclose(cat_unitary(0.0, 16), np.eye(32), atol=1e-15)


def test_vacuum_overlap():
    d = displacement_matrix(1.0, 32)
    assert d[0, 0].real == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_inverse_pair():
    prod = displacement_matrix(2.0, 64) @ displacement_matrix(-2.0, 64)
    # the truncation edge is not unitary; compare on the well-resolved block
    np.testing.assert_allclose(prod[:24, :24], np.eye(24), atol=1e-8)


def test_complex_displacement_matches_coherent_state():
    from catspec.fock_oracle import coherent_state

    a = 1.2 * cmath.exp(0.7j)
    np.testing.assert_allclose(displacement_matrix(a, 64)[:, 0], coherent_state(a, 64), atol=1e-12)


def test_truncation_guard():
    with pytest.raises(TruncationError):
        displacement_matrix(6.0, 32)


def test_cat_state_fidelity_and_phonons():
    dim = 128
    psi = cat_unitary(2.88, dim) @ initial_state(dim).amplitudes
    ref = analytic_cat_state(2.88, dim).amplitudes
    assert abs(np.vdot(ref, psi)) ** 2 > 1 - 1e-8
    n = np.arange(dim)
    nbar = np.sum(np.abs(psi.reshape(2, dim)) ** 2 * n)
    assert nbar == pytest.approx(2.88 ** 2, abs=1e-6)


def test_no_kick_returns_down():
    e = run_protocol_exact(COLD.replace(eta_abs=0.0, eta_em=0.0), 1.0)
    assert e.sz == pytest.approx(-1.0, abs=1e-12)
    assert e.sy == pytest.approx(0.0, abs=1e-12)


def test_absorption_only_value():
    p = COLD.replace(alpha=2.9, eta_abs=0.1)
    e = run_protocol_exact(p, math.pi / 2)
    assert e.sz == pytest.approx(-math.cos(0.58), abs=1e-9)
    assert e.sz == pytest.approx(-0.8365, abs=1e-4)


def test_norm_preserved():
    _, state = run_protocol_exact(COLD, 0.8, cos_theta=0.3, return_state=True)
    assert abs(state.norm() - 1) < 1e-9


def test_dimension_doubling_converged():
    a = run_protocol_exact(COLD, 1.3, cos_theta=-0.5, dim=128)
    b = run_protocol_exact(COLD, 1.3, cos_theta=-0.5, dim=256)
    assert abs(a.sz - b.sz) < 1e-8 and abs(a.sy - b.sy) < 1e-8


def test_small_grid_agreement():
    dz, dy = oracle_deviation([1.0, 2.9], [0.0, 0.2], [0.1], n_phi=8, dim=96)
    assert dz < 1e-6 and dy < 1e-6


def test_averaged_run_matches_sinc_form():
    for phi in (0.4, 1.7):
        got = run_protocol_averaged(COLD, phi, dim=96)
        ref = expectation(COLD, phi)
        assert got.sz == pytest.approx(ref.sz, abs=1e-6)
        assert got.sy == pytest.approx(ref.sy, abs=1e-6)


def test_direct_detection():
    assert direct_detection_exact(0.0).p1 == 0.0
    dd = direct_detection_exact(0.1)
    assert dd.p1 == pytest.approx(0.1 ** 2 * math.exp(-0.01), abs=1e-12)
    assert dd.p1 == pytest.approx(0.0099, abs=1e-6)


@pytest.mark.parametrize("phase", [0.0, 0.9, -2.3])
def test_direct_detection_phase(phase):
    dd = direct_detection_exact(0.1, kick_phase=phase)
    rel = cmath.phase(dd.c1 / dd.c0)
    assert math.remainder(rel - (phase + math.pi / 2), 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_phase_sensitive_fringe():
    eta = 0.1
    ref = -2 * eta * math.exp(-eta ** 2)
    assert phase_sensitive_exact(eta, 0.0).sy == pytest.approx(ref, abs=1e-12)
    assert phase_sensitive_exact(eta, math.pi).sy == pytest.approx(-ref, abs=1e-12)
    assert phase_sensitive_exact(eta, math.pi / 2).sy == pytest.approx(0.0, abs=1e-12)


def test_qubit_expectation_of_up_state():
    dim = 8
    psi = np.zeros(2 * dim, complex)
    psi[0] = 1
    from catspec.fock_oracle import JointState

    assert qubit_expectation(JointState(psi, dim)) == (1.0, 0.0)
