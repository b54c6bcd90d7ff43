"""
Coherent-state phase-space algebra.

Displacements are represented by plain Python complex numbers; ``alpha``
labels the coherent state ``D(alpha)|0>`` with mean phonon number
``|alpha|**2``.  Chaining two displacements obeys

    D(b) D(a) = exp(i Im(conj(a) * b)) D(a + b)

so a sequence of displacements is tracked as a net amplitude plus an
accumulated geometric phase.  For a closed polygonal path the phase equals
twice the signed (counter-clockwise positive) enclosed area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from scipy import constants as _const

__all__ = [
    "PhasePoint",
    "DisplacementRecord",
    "ModeSpec",
    "InvalidParameterError",
    "as_phase_point",
    "compose",
    "chain",
    "join",
    "shoelace_area",
    "lamb_dicke",
    "cat_size",
    "mean_phonon_number",
    "ION_MASS_40CA",
    "ION_MASS_44CA",
    "AXIAL_MODE_FREQUENCY",
    "MODE_PARTICIPATION",
]

PhasePoint = complex

_AMU = _const.physical_constants["atomic mass constant"][0]

#: Atomic masses (u) of the two calcium isotopes, converted to kg.
ION_MASS_40CA = 39.962_590_86 * _AMU
ION_MASS_44CA = 43.955_481_8 * _AMU

#: Lowest axial mode of the mixed two-ion crystal, Hz.
AXIAL_MODE_FREQUENCY = 1.199e6

#: Projection of the 729 nm coupling onto the crystal mode, chosen so that
#: lamb_dicke(729 nm, 40Ca, 1.199 MHz) reproduces eta = 0.0611.
MODE_PARTICIPATION = 0.690_266


class InvalidParameterError(ValueError):
    """Raised for physically meaningless inputs (negative times, empty grids...)."""


def as_phase_point(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidParameterError(f"phase-space point must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class DisplacementRecord:
    """Net displacement of a chained path and the geometric phase it picked up."""

    net: complex = 0j
    geo_phase: float = 0.0

    def then(self, d) -> "DisplacementRecord":
        """Apply one more displacement ``D(d)`` after the recorded path."""
        d = as_phase_point(d)
        phase = (self.net.conjugate() * d).imag
        return DisplacementRecord(self.net + d, self.geo_phase + phase)


def compose(d1, d2, acc: DisplacementRecord | None = None) -> DisplacementRecord:
    """Append ``D(d1)`` and then ``D(d2)`` to the path recorded in `acc`.

    Each pairwise product ``D(b) D(a)`` adds ``Im(conj(a) * b)`` to the
    geometric phase, where ``a`` is the net displacement so far.

    >>> compose(1, 1j).geo_phase
    1.0
    """
    if acc is None:
        acc = DisplacementRecord()
    return acc.then(d1).then(d2)


def chain(steps: Iterable, acc: DisplacementRecord | None = None) -> DisplacementRecord:
    """Fold an arbitrary sequence of displacements into a single record."""
    rec = DisplacementRecord() if acc is None else acc
    for d in steps:
        rec = rec.then(d)
    return rec


def join(first: DisplacementRecord, second: DisplacementRecord) -> DisplacementRecord:
    """Concatenate two recorded paths, `first` applied before `second`."""
    cross = (first.net.conjugate() * second.net).imag
    return DisplacementRecord(first.net + second.net,
                              first.geo_phase + second.geo_phase + cross)


def shoelace_area(vertices: Iterable) -> float:
    """Signed area of a closed polygon given as complex vertices."""
    pts = [complex(v) for v in vertices]
    if len(pts) < 3:
        return 0.0
    area = 0.0
    for a, b in zip(pts, pts[1:] + pts[:1]):
        area += a.real * b.imag - b.real * a.imag
    return 0.5 * area


@dataclass(frozen=True)
class ModeSpec:
    """One motional mode as seen by a laser beam acting on one ion.

    Parameters
    ----------
    frequency : float
        Mode frequency nu in Hz (not angular).
    ion_mass : float
        Mass of the ion the beam addresses, kg.
    participation : float
        Fraction of the single-ion recoil that couples to this mode, in [0, 1].
    beam_angle : float
        Angle between the beam k-vector and the mode axis, radians.
    """

    frequency: float = AXIAL_MODE_FREQUENCY
    ion_mass: float = ION_MASS_40CA
    participation: float = MODE_PARTICIPATION
    beam_angle: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise InvalidParameterError("mode frequency must be positive")
        if not self.ion_mass > 0:
            raise InvalidParameterError("ion mass must be positive")
        if not 0.0 <= self.participation <= 1.0:
            raise InvalidParameterError("participation must lie in [0, 1]")


def lamb_dicke(wavelength: float, mode: ModeSpec) -> float:
    """Lamb-Dicke factor ``k x0 * participation * cos(angle)``.

    ``x0 = sqrt(hbar / (2 m omega))`` is the ground-state extent, so with
    unit participation and a beam along the mode this is
    ``sqrt(E_rec / (h nu))``.
    """
    if not wavelength > 0:
        raise InvalidParameterError("wavelength must be positive")
    omega = 2 * math.pi * mode.frequency
    x0 = math.sqrt(_const.hbar / (2 * mode.ion_mass * omega))
    k = 2 * math.pi / wavelength
    return k * x0 * mode.participation * math.cos(mode.beam_angle)


def cat_size(eta: float, rabi: float, duration: float) -> float:
    """Cat amplitude reached by a bichromatic pulse.

    `rabi` is the carrier Rabi frequency in rad/s with the convention that
    ``2 pi / rabi`` is a full 2 pi rotation.  The sideband drive moves each
    component at ``eta * rabi / 2``.
    """
    if eta < 0 or rabi < 0 or duration < 0:
        raise InvalidParameterError("eta, rabi and duration must be non-negative")
    return 0.5 * eta * rabi * duration


def mean_phonon_number(alpha) -> float:
    return abs(complex(alpha)) ** 2
