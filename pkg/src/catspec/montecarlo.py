"""
Monte Carlo checks of the analytic signal model.

Every stochastic routine draws from an :class:`RngStream`, a (seed,
stream id) pair mapped onto numpy's ``SeedSequence``.  Large jobs are cut
into fixed-size batches, each with its own child stream, and partial
results are combined with integer counts or exact sums so the outcome never
depends on how many workers ran the batches.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .phasespace import InvalidParameterError
from .signal import ProtocolParams, heating_variance, phi_abs, phi_em_max

__all__ = [
    "RngStream",
    "WalkProfile",
    "emission_average",
    "heating_walk",
    "heating_walks",
    "walk_variance",
    "gaussian_contrast_check",
    "simulate_protocol",
    "ProtocolEstimate",
    "ContrastCheck",
    "VarianceEstimate",
]

BATCH_SHOTS = 1 << 16
BATCH_WALKS = 500


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    raise TypeError("batched simulations need an RngStream so that batches get disjoint substreams")


def _map_batches(fn, n_batches: int, workers: int):
    if workers <= 1 or n_batches <= 1:
        return [fn(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_batches)))


def _batch_sizes(total: int, batch: int) -> list[int]:
    full, rest = divmod(total, batch)
    return [batch] * full + ([rest] if rest else [])


# -- isotropic emission -------------------------------------------------------

def emission_average(phi_em: float, samples: int, rng) -> tuple[float, float]:
    """Sample mean and standard error of ``cos(phi_em * cos(theta))``.

    ``cos(theta)`` is uniform on [-1, 1] for isotropic emission.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    u = _as_generator(rng).uniform(-1.0, 1.0, size=samples)
    x = np.cos(phi_em * u)
    if samples == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(samples))


# -- heating random walk ------------------------------------------------------

@dataclass(frozen=True)
class WalkProfile:
    """Cat amplitude trajectory ``|alpha(t)|`` during creation, wait and recombination.

    ``shape="triangle"`` ramps up for `tau_cat` and straight back down;
    ``"trapezoid"`` holds ``sqrt(n_cat)`` for `tau_wait` in between.
    `steps` is the number of time steps per segment.
    """

    shape: str = "trapezoid"
    tau_cat: float = 50e-6
    tau_wait: float = 32e-6
    n_cat: float = 8.3
    steps: int = 1000

    def __post_init__(self):
        if self.shape not in ("triangle", "trapezoid"):
            raise InvalidParameterError(f"unknown walk shape {self.shape!r}")
        if self.steps < 100:
            raise InvalidParameterError("steps must be >= 100")
        if self.tau_cat < 0 or self.tau_wait < 0 or self.n_cat < 0:
            raise InvalidParameterError("times and n_cat must be non-negative")

    @property
    def duration(self) -> float:
        wait = self.tau_wait if self.shape == "trapezoid" else 0.0
        return 2 * self.tau_cat + wait

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint amplitudes ``alpha(t_i)`` and step lengths ``dt_i``."""
        a = math.sqrt(self.n_cat)
        n = self.steps
        u = (np.arange(n) + 0.5) / n
        amps = [a * u]
        dts = [np.full(n, self.tau_cat / n)]
        if self.shape == "trapezoid" and self.tau_wait > 0:
            amps.append(np.full(n, a))
            dts.append(np.full(n, self.tau_wait / n))
        amps.append(a * (1.0 - u))
        dts.append(np.full(n, self.tau_cat / n))
        return np.concatenate(amps).astype(complex), np.concatenate(dts)

    def analytic_variance(self, heating_rate: float) -> float:
        """``<Phi_h^2>`` for this trajectory."""
        if self.shape == "triangle":
            return 16.0 / 3.0 * heating_rate * self.tau_cat * self.n_cat
        return 8.0 * heating_rate * self.n_cat * (2.0 / 3.0 * self.tau_cat + self.tau_wait)


def _walk_batch(alpha_t: np.ndarray, dt: np.ndarray, heating_rate: float, n_walks: int,
                gen: np.random.Generator) -> np.ndarray:
    # kick components along x and p, each with variance R_h dt / 2
    sd = np.sqrt(0.5 * heating_rate * dt)
    dx = gen.standard_normal((n_walks, dt.size)) * sd
    dp = gen.standard_normal((n_walks, dt.size)) * sd
    dbeta = dx + 1j * dp
    # alpha(0) = alpha(T) = 0, so alpha_1 - alpha_2 = 2 alpha(t_i)
    lever = np.conj(2.0 * alpha_t)
    phi_g = (lever[None, :] * dbeta).imag.sum(axis=1)
    return 2.0 * phi_g


def heating_walk(profile: WalkProfile, heating_rate: float, rng) -> float:
    """One sample of the heating-induced relative phase between the cat components."""
    if heating_rate < 0:
        raise InvalidParameterError("heating rate must be non-negative")
    if heating_rate == 0:
        return 0.0
    alpha_t, dt = profile.grid()
    return float(_walk_batch(alpha_t, dt, heating_rate, 1, _as_generator(rng))[0])


def heating_walks(profile: WalkProfile, heating_rate: float, n_walks: int, rng,
                  workers: int = 1) -> np.ndarray:
    """`n_walks` independent heating phases, batch ``b`` drawn from ``rng.child(b)``."""
    if heating_rate < 0:
        raise InvalidParameterError("heating rate must be non-negative")
    if n_walks < 1:
        raise InvalidParameterError("n_walks must be >= 1")
    if heating_rate == 0:
        return np.zeros(n_walks)
    stream = _as_stream(rng)
    alpha_t, dt = profile.grid()
    sizes = _batch_sizes(n_walks, BATCH_WALKS)

    def run(b):
        return _walk_batch(alpha_t, dt, heating_rate, sizes[b], stream.child(b).generator())

    return np.concatenate(_map_batches(run, len(sizes), workers))


class VarianceEstimate(NamedTuple):
    variance: float
    std_error: float
    analytic: float
    skewness: float


def walk_variance(profile: WalkProfile, heating_rate: float, n_walks: int, rng,
                  workers: int = 1) -> VarianceEstimate:
    """Mean-square heating phase from `n_walks` walks, with its standard error.

    The phase has zero mean by construction, so ``<Phi^2>`` is estimated
    directly and its error is ``std(Phi^2)/sqrt(n)``.
    """
    phases = heating_walks(profile, heating_rate, n_walks, rng, workers)
    sq = phases ** 2
    var = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(n_walks)) if n_walks > 1 else 0.0
    skew = float(np.mean(phases ** 3) / var ** 1.5) if var > 0 else 0.0
    return VarianceEstimate(var, se, profile.analytic_variance(heating_rate), skew)


class ContrastCheck(NamedTuple):
    mc_mean_cos: float
    std_error: float
    analytic: float


def gaussian_contrast_check(variance: float, samples: int, rng) -> ContrastCheck:
    """Compare ``<cos X>`` for zero-mean Gaussian X against ``exp(-variance/2)``."""
    if variance < 0:
        raise InvalidParameterError("variance must be non-negative")
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    x = _as_generator(rng).normal(0.0, math.sqrt(variance), size=samples)
    c = np.cos(x)
    se = float(c.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return ContrastCheck(float(c.mean()), se, math.exp(-0.5 * variance))


# -- full protocol ------------------------------------------------------------

class ProtocolEstimate(NamedTuple):
    sz: float
    sy: float
    sz_err: float
    sy_err: float


def _protocol_batch(params: ProtocolParams, phi_sc: float, scatter_prob: float,
                    var_h: float, basis: str, n: int, gen: np.random.Generator) -> int:
    scattered = gen.random(n) < scatter_prob
    cos_theta = gen.uniform(-1.0, 1.0, size=n)
    phase_h = gen.normal(0.0, math.sqrt(var_h), size=n) if var_h > 0 else np.zeros(n)
    phase = phase_h + np.where(scattered,
                               phi_abs(params, phi_sc) + phi_em_max(params, phi_sc) * cos_theta,
                               0.0)
    if basis == "z":
        p_up = 0.5 * (1.0 - np.cos(phase))
    else:
        p_up = 0.5 * (1.0 + np.sin(phase))
    return int(np.count_nonzero(gen.random(n) < p_up))


def simulate_protocol(params: ProtocolParams, phi_sc: float, shots: int, scatter_prob: float,
                      rng, workers: int = 1) -> ProtocolEstimate:
    """Shot-by-shot simulation of the protocol in both measurement bases.

    Each basis gets `shots` projective measurements.  A shot scatters with
    probability `scatter_prob`; the total phase is the absorption phase plus
    a random emission phase plus a Gaussian heating phase.  Estimates are
    ``2 p_up - 1`` with binomial standard errors.
    """
    if shots < 1:
        raise InvalidParameterError("shots must be >= 1")
    if not 0.0 <= scatter_prob <= 1.0:
        raise InvalidParameterError("scatter_prob must lie in [0, 1]")
    stream = _as_stream(rng)
    var_h = heating_variance(params)
    sizes = _batch_sizes(shots, BATCH_SHOTS)
    results = {}
    for basis_id, basis in enumerate(("z", "y")):
        sub = stream.child(basis_id)

        def run(b, basis=basis, sub=sub):
            return _protocol_batch(params, phi_sc, scatter_prob, var_h, basis, sizes[b],
                                   sub.child(b).generator())

        ups = sum(_map_batches(run, len(sizes), workers))
        p = ups / shots
        results[basis] = (2 * p - 1, 2 * math.sqrt(p * (1 - p) / shots))
    return ProtocolEstimate(results["z"][0], results["y"][0], results["z"][1], results["y"][1])
