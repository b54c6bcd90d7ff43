"""
Projection noise, fluorescence readout and method sensitivities.

Readout convention: a shot is *bright* when the photon count exceeds the
threshold.  The logic qubit's ``|up>`` level is the metastable (dark)
state, so the quantity averaged into the signals is the dark fraction
``x = 1 - bright``, i.e. the probability of ``|up>``.

Two kinds of recoil enter the five methods.  The direct schemes look at
the motional ground state kicked by ``D(i eta)`` (absorption plus the
emission component along the mode); the cat-state schemes use the
geometric-phase model of :mod:`catspec.signal`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .montecarlo import BATCH_SHOTS, RngStream, _as_generator, _as_stream, _batch_sizes
from .phasespace import InvalidParameterError
from .signal import ProtocolParams, expectation, sigma_y_peak, sigma_z_extrema

__all__ = [
    "ShotRecord",
    "DetectorModel",
    "MethodReport",
    "MethodConfig",
    "DegenerateNoiseError",
    "METHODS",
    "PUBLISHED_TABLE",
    "PublishedRow",
    "projection_noise",
    "method_report",
    "simulate_detection",
    "simulate_counts",
    "dark_fraction",
    "method_signals",
    "analytic_reports",
    "compare_methods",
    "published_reports",
    "reports_to_csv",
    "CSV_HEADER",
]


class DegenerateNoiseError(ZeroDivisionError):
    """Both signals sit at 0 or 1, so projection noise vanishes."""


class ShotRecord(NamedTuple):
    counts: int
    outcome: int


@dataclass(frozen=True)
class DetectorModel:
    """Photon-counting readout of the logic ion.

    Counts are Poissonian with means `mean_dark` / `mean_bright` over the
    `window`; a dark ion can decay to the bright state during the window
    with lifetime `metastable_lifetime`.
    """

    mean_dark: float = 12.0
    mean_bright: float = 117.0
    window: float = 5e-3
    threshold: int = 40
    metastable_lifetime: float = 1.168

    def __post_init__(self):
        if not self.mean_dark < self.threshold < self.mean_bright:
            raise InvalidParameterError("need mean_dark < threshold < mean_bright")
        if not self.window > 0:
            raise InvalidParameterError("detection window must be positive")
        if not self.metastable_lifetime > 0:
            raise InvalidParameterError("metastable lifetime must be positive")

    @property
    def decay_probability(self) -> float:
        if math.isinf(self.metastable_lifetime):
            return 0.0
        return -math.expm1(-self.window / self.metastable_lifetime)


def projection_noise(p: float, n: int) -> float:
    """Standard error ``sqrt(p (1 - p) / N)`` of a mean of N binary outcomes."""
    if n < 1:
        raise InvalidParameterError("N must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("p must lie in [0, 1]")
    return math.sqrt(p * (1.0 - p) / n)


def _two_sig_figs(x: float) -> float:
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.2g}")


@dataclass(frozen=True)
class MethodReport:
    name: str
    n: int
    signal_a: float
    signal_b: float
    mu: float
    sigma: float
    snr: float
    beta: float
    shots_3sigma: float

    @property
    def shots_3sigma_rounded(self) -> float:
        return _two_sig_figs(self.shots_3sigma)

    @property
    def undetectable(self) -> bool:
        return math.isinf(self.shots_3sigma)


def method_report(name: str, a: float, b: float, n1: int, n2: int) -> MethodReport:
    """Signal, noise and sensitivity for one method from its two averages.

    ``mu = A - B``, ``sigma`` adds the two projection noises in quadrature,
    ``beta = SNR / sqrt(N)`` with ``N = min(N1, N2)`` and the shots needed
    for SNR = 3 are ``(3 / beta)^2`` (infinite when ``beta = 0``).
    """
    sigma = math.hypot(projection_noise(a, n1), projection_noise(b, n2))
    if sigma == 0:
        raise DegenerateNoiseError(f"{name}: zero projection noise for A={a}, B={b}")
    n = min(n1, n2)
    mu = a - b
    snr = mu / sigma
    beta = snr / math.sqrt(n)
    shots = math.inf if beta == 0 else (3.0 / beta) ** 2
    return MethodReport(name, n, a, b, mu, sigma, snr, beta, shots)


# -- readout simulation -------------------------------------------------------

def simulate_counts(is_bright, det: DetectorModel, rng) -> np.ndarray:
    """Photon counts for an array of bright/dark flags."""
    gen = _as_generator(rng)
    bright = np.asarray(is_bright, dtype=bool)
    n = bright.size
    lam = np.where(bright, det.mean_bright, det.mean_dark).astype(float)
    p_decay = det.decay_probability
    decays = (~bright) & (gen.random(n) < p_decay)
    k = int(np.count_nonzero(decays))
    if k:
        # decay time from an exponential truncated to the window
        u = gen.random(k)
        t = -det.metastable_lifetime * np.log1p(-u * p_decay)
        frac = t / det.window
        lam[decays] = det.mean_dark * frac + det.mean_bright * (1.0 - frac)
    return gen.poisson(lam)


def simulate_detection(is_bright: bool, det: DetectorModel, rng) -> ShotRecord:
    counts = int(simulate_counts(np.array([is_bright]), det, rng)[0])
    return ShotRecord(counts, int(counts > det.threshold))


def dark_fraction(p_up: float, shots: int, det: DetectorModel, rng: RngStream) -> float:
    """Fraction of `shots` classified dark when each shot is ``|up>`` with probability `p_up`."""
    stream = _as_stream(rng)
    dark = 0
    for b, size in enumerate(_batch_sizes(shots, BATCH_SHOTS)):
        gen = stream.child(b).generator()
        up = gen.random(size) < p_up
        counts = simulate_counts(~up, det, gen)
        dark += int(np.count_nonzero(counts <= det.threshold))
    return dark / shots


# -- the five methods ---------------------------------------------------------

METHODS = (
    "direct_sigma_z",
    "phase_sensitive_sigma_y",
    "css_sigma_z",
    "css_sigma_y",
    "css_sigma_y_no_gsc",
)


@dataclass(frozen=True)
class MethodConfig:
    """Inputs for simulating all five detection methods.

    `direct_background` is the dark fraction of the direct scheme without a
    scattered photon; `thermal_contrast` multiplies the cat signal when
    ground-state cooling is skipped.  Both are empirical inputs.
    """

    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    detector: DetectorModel = field(default_factory=DetectorModel)
    scatter_prob: float = 1.0
    direct_background: float = 0.049
    thermal_contrast: float = 0.32
    quadrature_nodes: int = 41
    shots: dict = field(default_factory=lambda: {
        "direct_sigma_z": 25000,
        "phase_sensitive_sigma_y": 9850,
        "css_sigma_z": 4200,
        "css_sigma_y": 4200,
        "css_sigma_y_no_gsc": 5050,
    })

    def __post_init__(self):
        if not 0.0 <= self.scatter_prob <= 1.0:
            raise InvalidParameterError("scatter_prob must lie in [0, 1]")
        if not 0.0 <= self.direct_background <= 1.0:
            raise InvalidParameterError("direct_background must lie in [0, 1]")
        if not 0.0 <= self.thermal_contrast <= 1.0:
            raise InvalidParameterError("thermal_contrast must lie in [0, 1]")


def _recoil_kicks(cfg: MethodConfig):
    x, w = np.polynomial.legendre.leggauss(cfg.quadrature_nodes)
    p = cfg.protocol
    return p.eta_abs + p.eta_em * x, 0.5 * w


def method_signals(cfg: MethodConfig) -> dict[str, tuple[float, float]]:
    """Exact ``(A, B)`` dark-state probabilities for every method."""
    p_sc = cfg.scatter_prob
    kick, weight = _recoil_kicks(cfg)
    # P(n=1) and 2 Re(c0* c1) of the kicked ground state, averaged over emission direction
    p_exc = float(np.sum(weight * kick ** 2 * np.exp(-kick ** 2)))
    ps_amp = float(np.sum(weight * 2 * kick * np.exp(-kick ** 2)))

    bg = cfg.direct_background
    out = {"direct_sigma_z": (min(bg + p_sc * p_exc, 1.0), bg)}
    out["phase_sensitive_sigma_y"] = (0.5 * (1 + p_sc * ps_amp), 0.5 * (1 - p_sc * ps_amp))

    params = cfg.protocol
    z_no = expectation(params, 0.0, scattered=False).sz
    z_min, z_max = sigma_z_extrema(params)
    hi = p_sc * z_max + (1 - p_sc) * z_no
    lo = p_sc * z_min + (1 - p_sc) * z_no
    out["css_sigma_z"] = (0.5 * (1 + hi), 0.5 * (1 + lo))

    _, y_max = sigma_y_peak(params)
    amp = p_sc * y_max
    out["css_sigma_y"] = (0.5 * (1 + amp), 0.5 * (1 - amp))
    amp_thermal = amp * cfg.thermal_contrast
    out["css_sigma_y_no_gsc"] = (0.5 * (1 + amp_thermal), 0.5 * (1 - amp_thermal))
    return out


def analytic_reports(cfg: MethodConfig) -> list[MethodReport]:
    """Reports from the exact signals, ignoring readout errors and sampling."""
    sig = method_signals(cfg)
    return [method_report(m, *sig[m], cfg.shots[m], cfg.shots[m]) for m in METHODS]


def compare_methods(cfg: MethodConfig, shots: int | dict | None, rng: RngStream) -> list[MethodReport]:
    """Simulate every method end to end: projection onto ``|up>``, photon counts, threshold.

    `shots` is per branch (A and B each); ``None`` uses ``cfg.shots``.
    Method ``i`` branch ``j`` draws from ``rng.child(i).child(j)``.
    """
    stream = _as_stream(rng)
    sig = method_signals(cfg)
    reports = []
    for i, m in enumerate(METHODS):
        if shots is None:
            n = cfg.shots[m]
        elif isinstance(shots, dict):
            n = shots[m]
        else:
            n = int(shots)
        if n < 1:
            raise InvalidParameterError("shots must be >= 1")
        a_true, b_true = sig[m]
        a = dark_fraction(a_true, n, cfg.detector, stream.child(i).child(0))
        b = dark_fraction(b_true, n, cfg.detector, stream.child(i).child(1))
        reports.append(method_report(m, a, b, n, n))
    return reports


# -- published numbers --------------------------------------------------------

class PublishedRow(NamedTuple):
    method: str
    n: int
    signal_a: float
    signal_b: float
    snr: float
    beta: float
    beta_err: float
    shots_3sigma: float
    shots_3sigma_err: float


PUBLISHED_TABLE = (
    PublishedRow("direct_sigma_z", 25000, 0.055, 0.049, 2.84, 0.018, 0.006, 2.7e5, 1.9e5),
    PublishedRow("phase_sensitive_sigma_y", 9850, 0.446, 0.372, 10.67, 0.107, 0.010, 7.8e2, 1.5e2),
    PublishedRow("css_sigma_z", 4200, 0.266, 0.172, 10.51, 0.162, 0.016, 3.4e2, 0.6e2),
    PublishedRow("css_sigma_y", 4200, 0.608, 0.376, 21.92, 0.338, 0.016, 7.9e1, 0.8e1),
    PublishedRow("css_sigma_y_no_gsc", 5050, 0.650, 0.575, 7.74, 0.109, 0.014, 7.6e2, 2.0e2),
)


def published_reports(rows: Iterable[PublishedRow] = PUBLISHED_TABLE) -> list[MethodReport]:
    """Recompute SNR, beta and shots from the printed (A, B, N) of each row."""
    return [method_report(r.method, r.signal_a, r.signal_b, r.n, r.n) for r in rows]


CSV_HEADER = ("method", "N", "signal_a", "signal_b", "mu", "sigma", "snr", "beta",
              "shots_3sigma", "shots_3sigma_rounded")


def reports_to_csv(reports: Iterable[MethodReport]) -> str:
    """Comma-separated table with a header row and LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([r.name, r.n, f"{r.signal_a:.6g}", f"{r.signal_b:.6g}", f"{r.mu:.6g}",
                    f"{r.sigma:.6g}", f"{r.snr:.6g}", f"{r.beta:.6g}",
                    f"{r.shots_3sigma:.6g}", f"{r.shots_3sigma_rounded:.6g}"])
    return buf.getvalue()
