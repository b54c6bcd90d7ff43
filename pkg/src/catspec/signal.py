"""
Closed-form logic-qubit signal after the cat-state spectroscopy protocol.

A photon absorbed at scatter phase ``phi_sc`` displaces both cat
components; after recombination the qubit is rotated by the geometric phase

    phi_abs = 2 alpha eta_abs sin(phi_sc)

The re-emitted photon adds ``phi_em = phi_em_max * cos(theta)`` with a
random emission angle; isotropic averaging turns ``cos`` into ``sinc``.
Electric-field noise adds a Gaussian phase whose variance grows with the
cat size, reducing the contrast by ``exp(-<phi_h^2>/2)``.

Sign convention: with no scattering the qubit returns to ``|down>`` so
``<sigma_z> = -1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .phasespace import (
    AXIAL_MODE_FREQUENCY,
    ION_MASS_44CA,
    InvalidParameterError,
    ModeSpec,
    lamb_dicke,
)

__all__ = [
    "ProtocolParams",
    "QubitExpectation",
    "ABSORPTION_WAVELENGTH",
    "EMISSION_WAVELENGTH",
    "default_recoil_etas",
    "phi_abs",
    "phi_em_max",
    "sinc",
    "heating_variance",
    "heating_contrast",
    "expectation",
    "fringe_curve",
    "fringe_arrays",
    "sigma_y_peak",
    "sigma_z_extrema",
    "fringe_amplitudes",
    "detection_probability",
    "max_detection_probability",
]

#: D3/2 -> P1/2 repumper (absorbed) and P1/2 -> S1/2 (emitted) vacuum wavelengths.
ABSORPTION_WAVELENGTH = 866.452e-9
EMISSION_WAVELENGTH = 396.959e-9


def default_recoil_etas(frequency: float = AXIAL_MODE_FREQUENCY) -> tuple[float, float]:
    """Single-ion recoil Lamb-Dicke factors of 44Ca+ for the absorbed and emitted photon."""
    mode = ModeSpec(frequency=frequency, ion_mass=ION_MASS_44CA, participation=1.0)
    return (lamb_dicke(ABSORPTION_WAVELENGTH, mode),
            lamb_dicke(EMISSION_WAVELENGTH, mode))


_ETA_ABS, _ETA_EM = default_recoil_etas()


@dataclass(frozen=True)
class ProtocolParams:
    """Physical parameters of one cat-spectroscopy run.

    Times in seconds, `nu` in Hz, `heating_rate` in quanta per second.
    """

    alpha: float = 2.88
    eta_abs: float = _ETA_ABS
    eta_em: float = _ETA_EM
    nu: float = AXIAL_MODE_FREQUENCY
    heating_rate: float = 40.0
    tau_cat: float = 50e-6
    tau_wait: float = 32e-6
    branch_blue: float = 0.936

    def __post_init__(self):
        for name in ("alpha", "eta_abs", "eta_em", "heating_rate", "tau_cat", "tau_wait"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be finite and non-negative, got {value}")
        if not self.nu > 0:
            raise InvalidParameterError("nu must be positive")
        if not 0.0 <= self.branch_blue <= 1.0:
            raise InvalidParameterError("branch_blue must lie in [0, 1]")

    @property
    def n_cat(self) -> float:
        return self.alpha ** 2

    def replace(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)


class QubitExpectation(NamedTuple):
    sz: float
    sy: float


def phi_abs(params: ProtocolParams, phi_sc):
    """Geometric phase from the absorption recoil."""
    return 2.0 * params.alpha * params.eta_abs * np.sin(phi_sc)


def phi_em_max(params: ProtocolParams, phi_sc):
    """Emission-recoil phase for a photon emitted along the mode axis."""
    return 2.0 * params.alpha * params.eta_em * np.sin(phi_sc)


_SINC_SERIES_CUTOFF = 1e-4


def sinc(x):
    """Unnormalised ``sin(x)/x`` with ``sinc(0) = 1``.

    Below ``|x| = 1e-4`` a four-term Taylor series is used.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(x) / x
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def heating_variance(params: ProtocolParams) -> float:
    """Mean-squared heating phase for constant-force cat creation and recombination."""
    return 8.0 * params.heating_rate * params.n_cat * (2.0 / 3.0 * params.tau_cat + params.tau_wait)


def heating_contrast(params: ProtocolParams) -> float:
    return math.exp(-0.5 * heating_variance(params))


def expectation(params: ProtocolParams, phi_sc, scattered: bool = True,
                cos_theta=None) -> QubitExpectation:
    """Logic-qubit ``(<sigma_z>, <sigma_y>)`` at the end of the protocol.

    With `cos_theta` given, the emission direction is fixed instead of
    averaged isotropically and the result is ``-cos``/``sin`` of the total
    phase.  Array-valued `phi_sc` returns arrays.
    """
    contrast = heating_contrast(params)
    if not scattered:
        zeros = np.zeros_like(np.asarray(phi_sc, dtype=float))
        sz = -contrast + zeros
        sy = zeros
    elif cos_theta is None:
        a = phi_abs(params, phi_sc)
        s = sinc(phi_em_max(params, phi_sc))
        sz = -np.cos(a) * s * contrast
        sy = np.sin(a) * s * contrast
    else:
        total = phi_abs(params, phi_sc) + phi_em_max(params, phi_sc) * cos_theta
        sz = -np.cos(total) * contrast
        sy = np.sin(total) * contrast
    if np.ndim(sz) == 0:
        return QubitExpectation(float(sz), float(sy))
    return QubitExpectation(np.asarray(sz), np.asarray(sy))


def fringe_arrays(params: ProtocolParams, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidParameterError("fringe grid must not be empty")
    e = expectation(params, grid)
    return grid, np.asarray(e.sz, dtype=float), np.asarray(e.sy, dtype=float)


def fringe_curve(params: ProtocolParams, grid: Sequence[float]) -> list[tuple[float, QubitExpectation]]:
    """Expectation values over a grid of scatter phases."""
    phis, sz, sy = fringe_arrays(params, grid)
    return [(float(p), QubitExpectation(float(z), float(y))) for p, z, y in zip(phis, sz, sy)]


def _argmax_on_circle(f, n_grid: int = 2049) -> tuple[float, float]:
    grid = np.linspace(0.0, math.pi, n_grid)
    values = f(grid)
    i = int(np.argmax(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]
    if hi - lo <= 0:
        return float(grid[i]), float(values[i])
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    if -res.fun >= values[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(values[i])


def sigma_y_peak(params: ProtocolParams) -> tuple[float, float]:
    """``(phi_sc, max <sigma_y>)`` over the fringe; the minimum is its mirror at ``-phi_sc``."""
    return _argmax_on_circle(lambda p: np.asarray(expectation(params, p).sy))


def sigma_z_extrema(params: ProtocolParams) -> tuple[float, float]:
    """``(min, max)`` of ``<sigma_z>`` over the fringe (attained at 0 and near pi/2)."""
    _, zmax = _argmax_on_circle(lambda p: np.asarray(expectation(params, p).sz))
    _, neg_min = _argmax_on_circle(lambda p: -np.asarray(expectation(params, p).sz))
    return -neg_min, zmax


def fringe_amplitudes(params: ProtocolParams, n: int = 4096) -> tuple[float, float]:
    """Fundamental Fourier amplitudes ``(A_y, A_z)`` of the two fringes.

    ``<sigma_y>`` repeats once per motional period and ``<sigma_z>`` twice,
    so these are the amplitudes a least-squares sinusoid fit over whole
    periods converges to.
    """
    phis = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    e = expectation(params, phis)
    ay = 2.0 * abs(np.mean(np.asarray(e.sy) * np.exp(-1j * phis)))
    az = 2.0 * abs(np.mean(np.asarray(e.sz) * np.exp(-2j * phis)))
    return float(ay), float(az)


def detection_probability(phase, eta_ratio: float = 1.0):
    """Probability of finding ``|up>`` after one scatter with geometric phase `phase`.

    Unit heating contrast; `eta_ratio` is ``eta_em / eta_abs``.
    """
    phase = np.asarray(phase, dtype=float)
    return 0.5 * (1.0 - np.cos(phase) * sinc(eta_ratio * phase))


def max_detection_probability(eta_ratio: float, phi_max: float = 4 * math.pi,
                              step: float = 1e-4) -> float:
    """Largest single-shot scatter-detection probability over geometric phases ``>= 0``."""
    if not eta_ratio > 0:
        raise InvalidParameterError("eta_ratio must be positive")
    grid = np.arange(0.0, phi_max + step, step)
    p = detection_probability(grid, eta_ratio)
    i = int(np.argmax(p))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda x: -float(detection_probability(x, eta_ratio)),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(float(p[i]), float(-res.fun))
