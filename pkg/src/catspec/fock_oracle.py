"""
Brute-force qubit (x) truncated harmonic oscillator simulator.

Used as an independent check of :mod:`catspec.signal`: the cat is built
with the unitary ``U_D = exp(alpha (a^dag - a) sigma_x)``, kicked, undone
and the qubit is read out by partial trace.  Nothing here uses the closed
forms being tested.

Basis ordering is qubit-major: index ``q * dim + n`` with ``q = 0`` for
``|up>`` and ``q = 1`` for ``|down>``; ``sigma_z = diag(1, -1)``.

Kick convention: a recoil at scatter phase ``phi_sc`` displaces the motion
by ``(eta / 2) * exp(-i phi_sc)`` relative to the (real) cat axis.  With
this choice the relative phase between the two cat components is
``2 alpha eta sin(phi_sc)``, the phase used by the analytic model.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .phasespace import InvalidParameterError
from .signal import ProtocolParams, QubitExpectation

__all__ = [
    "TruncationError",
    "JointState",
    "annihilation",
    "displacement_matrix",
    "cat_unitary",
    "initial_state",
    "analytic_cat_state",
    "coherent_state",
    "qubit_expectation",
    "run_protocol_exact",
    "run_protocol_averaged",
    "direct_detection_exact",
    "phase_sensitive_exact",
    "DirectDetection",
    "oracle_deviation",
]

UP, DOWN = 0, 1
DEFAULT_DIM = 128
TRUNCATION_TOL = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class TruncationError(RuntimeError):
    """The Fock truncation is too small for the requested displacement."""


class JointState(NamedTuple):
    amplitudes: np.ndarray
    dim: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def split(self) -> np.ndarray:
        """Amplitudes reshaped to ``(2, dim)``: qubit row, Fock column."""
        return self.amplitudes.reshape(2, self.dim)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _check_dim(alpha: complex, dim: int):
    if dim < 8:
        raise InvalidParameterError("dim must be >= 8")
    r = abs(alpha)
    if r * r + 5 * r >= dim:
        raise TruncationError(f"dim={dim} too small for |alpha|={r:.3g}")


@lru_cache(maxsize=256)
def _real_displacement(r: float, dim: int) -> np.ndarray:
    # exponentiate in a doubled space so the returned block does not feel the cut
    work = 2 * dim
    a = annihilation(work)
    big = expm(r * (a.conj().T - a))
    block = big[:dim, :dim].copy()
    low = dim // 4
    defect = np.abs(block[:, :low].conj().T @ block[:, :low] - np.eye(low)).max()
    if defect > TRUNCATION_TOL:
        raise TruncationError(f"unitarity defect {defect:.2e} for |alpha|={r:.3g}, dim={dim}")
    block.setflags(write=False)
    return block


def displacement_matrix(alpha, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Truncated ``D(alpha) = exp(alpha a^dag - conj(alpha) a)``.

    Built as ``R(phi) D(|alpha|) R(phi)^dag`` with ``R(phi) = exp(i phi n)``;
    the real displacement is a scaling-and-squaring matrix exponential.
    Raises :class:`TruncationError` when the lowest ``dim // 4`` columns
    lose unitarity by more than 1e-6.
    """
    alpha = complex(alpha)
    _check_dim(alpha, dim)
    r, phi = abs(alpha), math.atan2(alpha.imag, alpha.real)
    d = _real_displacement(round(r, 15), dim)
    if phi == 0.0:
        return d.copy()
    rot = np.exp(1j * phi * np.arange(dim))
    return rot[:, None] * d * rot.conj()[None, :]


def cat_unitary(alpha: float, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Joint ``exp(alpha (a^dag - a) sigma_x)`` as ``P_+ (x) D(alpha) + P_- (x) D(-alpha)``."""
    plus = 0.5 * (np.eye(2) + SIGMA_X)
    minus = 0.5 * (np.eye(2) - SIGMA_X)
    return np.kron(plus, displacement_matrix(alpha, dim)) + np.kron(minus, displacement_matrix(-alpha, dim))


def initial_state(dim: int = DEFAULT_DIM) -> JointState:
    psi = np.zeros(2 * dim, dtype=complex)
    psi[DOWN * dim] = 1.0
    return JointState(psi, dim)


def coherent_state(alpha, dim: int) -> np.ndarray:
    """Fock expansion ``exp(-|a|^2/2) a^n / sqrt(n!)`` evaluated by recursion."""
    alpha = complex(alpha)
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def analytic_cat_state(alpha: float, dim: int = DEFAULT_DIM) -> JointState:
    """``(|+>|alpha> - |->|-alpha>) / sqrt(2)`` from coherent-state expansions."""
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    minus = np.array([1, -1], dtype=complex) / math.sqrt(2)
    psi = (np.kron(plus, coherent_state(alpha, dim)) - np.kron(minus, coherent_state(-alpha, dim))) / math.sqrt(2)
    return JointState(psi, dim)


def qubit_expectation(state: JointState) -> QubitExpectation:
    """Reduced-qubit ``(<sigma_z>, <sigma_y>)`` after tracing out the motion."""
    m = state.split()
    rho = m @ m.conj().T
    sz = float(np.real(np.trace(rho @ SIGMA_Z)))
    sy = float(np.real(np.trace(rho @ SIGMA_Y)))
    return QubitExpectation(sz, sy)


def _apply_kick(psi: np.ndarray, kick: complex, dim: int) -> np.ndarray:
    if kick == 0:
        return psi
    d = displacement_matrix(kick, dim)
    m = psi.reshape(2, dim)
    return (m @ d.T).reshape(-1)


def run_protocol_exact(params: ProtocolParams, phi_sc: float, cos_theta: float | None = None,
                       dim: int = DEFAULT_DIM, return_state: bool = False):
    """Create the cat, kick it, recombine and read the qubit.

    ``cos_theta=None`` means no emission kick; otherwise the emitted photon
    leaves at the given direction cosine relative to the mode axis.
    Heating is not included.
    """
    direction = complex(math.cos(phi_sc), -math.sin(phi_sc))
    kick_abs = 0.5 * params.eta_abs * direction
    kick_em = 0.0 if cos_theta is None else 0.5 * params.eta_em * cos_theta * direction
    _check_dim(params.alpha + abs(kick_abs) + abs(kick_em), dim)
    u = cat_unitary(params.alpha, dim)
    psi = u @ initial_state(dim).amplitudes
    psi = _apply_kick(psi, kick_abs, dim)
    psi = _apply_kick(psi, kick_em, dim)
    psi = u.conj().T @ psi
    state = JointState(psi, dim)
    if abs(state.norm() - 1.0) > 1e-9:
        raise TruncationError(f"norm drifted to {state.norm():.12f}")
    result = qubit_expectation(state)
    return (result, state) if return_state else result


def run_protocol_averaged(params: ProtocolParams, phi_sc: float, dim: int = DEFAULT_DIM,
                          nodes: int = 41) -> QubitExpectation:
    """Isotropic emission average by Gauss-Legendre quadrature in ``cos(theta)``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    sz = sy = 0.0
    for c, wi in zip(x, w):
        e = run_protocol_exact(params, phi_sc, float(c), dim)
        sz += 0.5 * wi * e.sz
        sy += 0.5 * wi * e.sy
    return QubitExpectation(float(sz), float(sy))


class DirectDetection(NamedTuple):
    p1: float
    c0: complex
    c1: complex


def direct_detection_exact(eta: float, dim: int = 32, kick_phase: float = 0.0) -> DirectDetection:
    """Kick the ground state by ``D(i eta e^{i phi})`` and return ``P(n=1)`` and the n=0,1 amplitudes."""
    if eta < 0:
        raise InvalidParameterError("eta must be non-negative")
    psi = displacement_matrix(1j * eta * complex(math.cos(kick_phase), math.sin(kick_phase)), dim)[:, 0]
    p1 = float(abs(psi[1]) ** 2)
    if abs(p1 - eta ** 2) > eta ** 4 + 1e-15:
        raise AssertionError(f"P(n=1)={p1} deviates from eta^2 by more than eta^4")
    return DirectDetection(p1, complex(psi[0]), complex(psi[1]))


def phase_sensitive_exact(eta: float, kick_phase: float, dim: int = 32) -> QubitExpectation:
    """Kick, then map ``|down,1> <-> |up,0>`` (ideal red-sideband pi pulse) and read the qubit."""
    motion = displacement_matrix(1j * eta * complex(math.cos(kick_phase), math.sin(kick_phase)), dim)[:, 0]
    psi = np.zeros(2 * dim, dtype=complex)
    psi[DOWN * dim:] = motion
    i, j = DOWN * dim + 1, UP * dim + 0
    psi[i], psi[j] = psi[j], psi[i]
    return qubit_expectation(JointState(psi, dim))


def oracle_deviation(alphas, etas_abs, etas_em, n_phi: int = 64, cos_thetas=(-1.0, 0.0, 1.0),
                     dim: int = DEFAULT_DIM) -> tuple[float, float]:
    """Largest ``|oracle - analytic|`` for sigma_z and sigma_y over a parameter grid.

    The analytic side is the fixed-direction closed form with unit heating contrast.
    """
    from .signal import expectation

    phis = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    worst_z = worst_y = 0.0
    for alpha in alphas:
        for ea in etas_abs:
            for ee in etas_em:
                p = ProtocolParams(alpha=alpha, eta_abs=ea, eta_em=ee, heating_rate=0.0)
                for c in cos_thetas:
                    ref = expectation(p, phis, cos_theta=c)
                    for k, phi in enumerate(phis):
                        got = run_protocol_exact(p, float(phi), float(c), dim)
                        worst_z = max(worst_z, abs(got.sz - ref.sz[k]))
                        worst_y = max(worst_y, abs(got.sy - ref.sy[k]))
    return worst_z, worst_y
