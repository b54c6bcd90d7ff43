"""
Line shape of the D3/2 -> P1/2 repumper transition and simulated A_y spectra.

The transition splits into six Zeeman components in a magnetic field, each
a Lorentzian of the natural width weighted by its squared Clebsch-Gordan
coefficient (equal initial sublevel populations, polarisation ignored).
Scattering follows a saturable pump-out law

    p(Delta) = 1 - exp(-kappa * power * duration * L(Delta))

where ``L`` is the peak-normalised excitation profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.optimize import brentq, minimize_scalar

from .montecarlo import RngStream, simulate_protocol
from .phasespace import InvalidParameterError
from .signal import ProtocolParams, sigma_y_peak

__all__ = [
    "BOHR_MHZ_PER_GAUSS",
    "SpectralModel",
    "DriveParams",
    "SpectrumScan",
    "zeeman_components",
    "excitation_profile",
    "profile_fwhm",
    "calibrate_saturation",
    "scatter_probability",
    "photon_number_distribution",
    "spectrum_scan",
    "power_series",
]

#: mu_B / h in Hz per gauss
BOHR_MHZ_PER_GAUSS = 1.39962449361e6

# squared Clebsch-Gordan coefficients for J=3/2 -> J'=1/2, keyed by (2 m_lower, 2 m_upper)
_CG2 = {
    (-3, -1): Fraction(1, 2), (-1, -1): Fraction(1, 3), (1, -1): Fraction(1, 6),
    (-1, 1): Fraction(1, 6), (1, 1): Fraction(1, 3), (3, 1): Fraction(1, 2),
}


@dataclass(frozen=True)
class SpectralModel:
    """Zeeman-split Lorentzian line; frequencies in Hz, field in gauss."""

    natural_fwhm: float = 22.4e6
    b_field: float = 4.1
    g_lower: float = 0.8
    g_upper: float = 2.0 / 3.0
    components: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.natural_fwhm > 0:
            raise InvalidParameterError("natural_fwhm must be positive")
        if not (self.b_field >= 0 and math.isfinite(self.b_field)):
            raise InvalidParameterError("b_field must be finite and non-negative")
        if not self.components:
            object.__setattr__(self, "components", tuple(zeeman_components(self)))


@dataclass(frozen=True)
class DriveParams:
    """Spectroscopy drive: relative power, pulse duration (s) and calibration ``kappa``."""

    power: float = 1.0
    duration: float = 1e-6
    saturation_scale: float = 1.0

    def __post_init__(self):
        for name in ("power", "duration", "saturation_scale"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be finite and non-negative")

    @property
    def dose(self) -> float:
        return self.saturation_scale * self.power * self.duration


def zeeman_components(model: SpectralModel) -> list[tuple[float, float]]:
    """``(detuning_Hz, weight)`` for every allowed ``m_lower -> m_upper`` line.

    At zero field all lines coincide and a single component is returned.
    """
    if model.b_field == 0:
        return [(0.0, 1.0)]
    total = sum(_CG2.values())
    scale = BOHR_MHZ_PER_GAUSS * model.b_field
    out = []
    for (ml2, mu2), w in sorted(_CG2.items()):
        shift = (model.g_upper * mu2 / 2 - model.g_lower * ml2 / 2) * scale
        out.append((shift, float(w / total)))
    return out


def _raw_profile(model: SpectralModel, detuning) -> np.ndarray:
    d = np.asarray(detuning, dtype=float)
    half = 0.5 * model.natural_fwhm
    acc = np.zeros_like(d)
    for shift, w in model.components:
        acc = acc + w / (1.0 + ((d - shift) / half) ** 2)
    return acc


@lru_cache(maxsize=64)
def _peak(model: SpectralModel) -> tuple[float, float]:
    shifts = [s for s, _ in model.components]
    lo, hi = min(shifts), max(shifts)
    if hi - lo == 0:
        return lo, float(_raw_profile(model, lo))
    grid = np.linspace(lo, hi, 2001)
    vals = _raw_profile(model, grid)
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda x: -float(_raw_profile(model, x)), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-3})
    if -res.fun > vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])


def excitation_profile(model: SpectralModel, detuning):
    """Peak-normalised sum of the weighted Lorentzian components."""
    out = _raw_profile(model, detuning) / _peak(model)[1]
    return float(out) if out.ndim == 0 else out


def profile_fwhm(model: SpectralModel) -> float:
    """Full width at half maximum of the composite profile by root finding."""
    center = _peak(model)[0]
    f = lambda d: excitation_profile(model, d) - 0.5
    span = 10 * model.natural_fwhm + 2 * max(abs(s) for s, _ in model.components)
    right = brentq(f, center, center + span, xtol=1e-6)
    left = brentq(f, center - span, center, xtol=1e-6)
    return right - left


def calibrate_saturation(model: SpectralModel, power: float, duration: float,
                         target: float = 0.5) -> float:
    """``kappa`` giving on-resonance scatter probability `target` at this power and duration."""
    if not 0 < target < 1:
        raise InvalidParameterError("target must lie in (0, 1)")
    if not (power > 0 and duration > 0):
        raise InvalidParameterError("power and duration must be positive")
    return -math.log1p(-target) / (power * duration * excitation_profile(model, 0.0))


def scatter_probability(model: SpectralModel, drive: DriveParams, detuning):
    """Probability that at least one photon is scattered."""
    out = -np.expm1(-drive.dose * np.asarray(excitation_profile(model, detuning)))
    return float(out) if np.ndim(out) == 0 else out


def photon_number_distribution(branch_blue: float):
    """Number of infrared photons scattered before pump-out, a geometric law on ``k >= 1``.

    Returns a frozen ``scipy.stats`` distribution: ``pmf(1)`` is the
    single-photon probability, ``sf(1)`` the multi-photon tail.
    """
    if not 0 < branch_blue <= 1:
        raise InvalidParameterError("branch_blue must lie in (0, 1]")
    return stats.geom(branch_blue)


class SpectrumScan(NamedTuple):
    detuning: np.ndarray
    a_y: np.ndarray
    a_y_err: np.ndarray
    scatter_prob: np.ndarray


def spectrum_scan(model: SpectralModel, drive: DriveParams, params: ProtocolParams, grid,
                  shots: int = 0, rng: RngStream | None = None, workers: int = 1) -> SpectrumScan:
    """Signal amplitude ``A_y`` across a detuning grid.

    Noiseless: ``A_y = p(Delta) * max sigma_y``.  With ``shots > 0`` each
    point alternates between fringe maximum and minimum (`shots` each) and
    ``A_y`` is half their difference; point ``i`` draws from
    ``rng.child(i)``.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidParameterError("detuning grid must not be empty")
    p = np.atleast_1d(scatter_probability(model, drive, grid))
    phi_peak, amp = sigma_y_peak(params)
    if shots <= 0:
        return SpectrumScan(grid, p * amp, np.zeros_like(grid), p)
    if rng is None:
        raise InvalidParameterError("a seeded RngStream is required for shot sampling")
    a_y = np.empty_like(grid)
    err = np.empty_like(grid)
    for i, pi in enumerate(p):
        sub = rng.child(i)
        hi = simulate_protocol(params, phi_peak, shots, float(pi), sub.child(0), workers)
        lo = simulate_protocol(params, -phi_peak, shots, float(pi), sub.child(1), workers)
        a_y[i] = 0.5 * (hi.sy - lo.sy)
        err[i] = 0.5 * math.hypot(hi.sy_err, lo.sy_err)
    return SpectrumScan(grid, a_y, err, p)


def power_series(model: SpectralModel, relative_powers=(1.0, 2.0, 4.0), duration: float = 1e-6,
                 p_lowest: float = 0.5) -> list[DriveParams]:
    """Drives at the given relative powers, ``kappa`` fixed so the lowest reaches `p_lowest` on resonance."""
    powers = sorted(float(x) for x in relative_powers)
    kappa = calibrate_saturation(model, powers[0], duration, p_lowest)
    return [DriveParams(pw, duration, kappa) for pw in relative_powers]
