"""
Weighted least-squares fits of fringes (sinusoid) and line profiles (Gaussian).

Both models are small and fixed, so the solver is a plain damped
Gauss-Newton (Levenberg-Marquardt) iteration with analytic Jacobians.
Covariances treat the supplied sigmas as absolute standard deviations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .phasespace import InvalidParameterError

__all__ = [
    "WeightedSeries",
    "FitResult",
    "levenberg_marquardt",
    "sinusoid",
    "gaussian",
    "fit_sinusoid",
    "fit_gaussian",
    "FWHM_PER_SIGMA",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

MAX_ITER = 200
STEP_TOL = 1e-12


@dataclass(frozen=True)
class WeightedSeries:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        s = np.broadcast_to(np.asarray(self.sigma, dtype=float), y.shape).astype(float)
        if not (x.shape == y.shape == s.shape):
            raise InvalidParameterError("x, y and sigma must have equal lengths")
        if np.any(~(s > 0)):
            raise InvalidParameterError("sigma must be strictly positive")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", s)

    def __len__(self):
        return self.x.size


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    converged: bool
    names: tuple[str, ...] = ()
    n_iter: int = 0
    dof: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def error(self, name: str) -> float:
        return float(self.errors[self.names.index(name)])


def levenberg_marquardt(model: Callable, jacobian: Callable, p0, series: WeightedSeries,
                        max_iter: int = MAX_ITER, step_tol: float = STEP_TOL):
    """Minimise ``sum(((y - model(x, p)) / sigma)^2)``.

    Returns ``(params, covariance, chi2, converged, iterations)``.
    """
    x, y, s = series.x, series.y, series.sigma
    p = np.asarray(p0, dtype=float).copy()
    r = (y - model(x, p)) / s
    chi2 = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jacobian(x, p) / s[:, None]
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag <= 0] = 1.0
        improved = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = p + step
            r_new = (y - model(x, trial)) / s
            chi2_new = float(r_new @ r_new)
            if np.isfinite(chi2_new) and chi2_new <= chi2:
                improved = True
                break
            lam *= 10
        if not improved:
            # no downhill step at any damping: already at the minimum
            converged = True
            break
        small = np.linalg.norm(step) <= step_tol * (np.linalg.norm(p) + step_tol)
        p, r, chi2 = trial, r_new, chi2_new
        lam = max(lam / 10, 1e-15)
        if small:
            converged = True
            break
    J = jacobian(x, p) / s[:, None]
    A = J.T @ J
    try:
        cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(A)
    cov = 0.5 * (cov + cov.T)
    return p, cov, chi2, converged, it


# -- sinusoid -----------------------------------------------------------------

SINUSOID_NAMES = ("amplitude", "period", "phase", "offset")


def sinusoid(x, amplitude, period, phase, offset):
    return offset + amplitude * np.sin(2 * np.pi * np.asarray(x) / period + phase)


def _sin_model(x, p):
    return sinusoid(x, *p)


def _sin_jac(x, p):
    a, t, ph, _ = p
    arg = 2 * np.pi * x / t + ph
    c = np.cos(arg)
    return np.column_stack([np.sin(arg), -a * c * 2 * np.pi * x / t ** 2, a * c, np.ones_like(x)])


def _sin_linear(series: WeightedSeries, period: float, phase: float):
    w = 1.0 / series.sigma
    basis = np.column_stack([np.sin(2 * np.pi * series.x / period + phase), np.ones_like(series.x)])
    coef, *_ = np.linalg.lstsq(basis * w[:, None], series.y * w, rcond=None)
    resid = (series.y - basis @ coef) * w
    return coef, float(resid @ resid)


def fit_sinusoid(series: WeightedSeries, period_hint: float, fit_period: bool = True,
                 n_phase: int = 32) -> FitResult:
    """Fit ``offset + A sin(2 pi x / T + phase)``.

    The starting phase comes from a coarse scan at `period_hint`.  The
    result is normalised to ``A >= 0`` and ``phase`` in ``[0, 2 pi)``.  With
    ``fit_period=False`` the period stays at the hint and its variance is 0.
    """
    n_par = 4 if fit_period else 3
    if len(series) < n_par + 1:
        raise InvalidParameterError(f"need at least {n_par + 1} points")
    if not period_hint > 0:
        raise InvalidParameterError("period_hint must be positive")
    best = None
    for ph in np.linspace(0, 2 * np.pi, n_phase, endpoint=False):
        coef, chi2 = _sin_linear(series, period_hint, ph)
        if best is None or chi2 < best[0]:
            best = (chi2, coef[0], ph, coef[1])
    _, a0, ph0, off0 = best

    if fit_period:
        p, cov, chi2, ok, it = levenberg_marquardt(_sin_model, _sin_jac, [a0, period_hint, ph0, off0], series)
    else:
        model = lambda x, q: sinusoid(x, q[0], period_hint, q[1], q[2])
        jac = lambda x, q: _sin_jac(x, [q[0], period_hint, q[1], q[2]])[:, [0, 2, 3]]
        q, cq, chi2, ok, it = levenberg_marquardt(model, jac, [a0, ph0, off0], series)
        p = np.array([q[0], period_hint, q[1], q[2]])
        cov = np.zeros((4, 4))
        idx = [0, 2, 3]
        cov[np.ix_(idx, idx)] = cq

    if p[0] < 0:
        p[0] = -p[0]
        p[2] += np.pi
        flip = np.diag([-1.0, 1.0, 1.0, 1.0])
        cov = flip @ cov @ flip
    p[2] = float(np.mod(p[2], 2 * np.pi))
    if p[2] >= 2 * np.pi:  # mod of a tiny negative number rounds up to 2 pi
        p[2] = 0.0
    return FitResult(p, cov, chi2, ok, SINUSOID_NAMES, it, len(series) - n_par)


# -- Gaussian -----------------------------------------------------------------

GAUSSIAN_NAMES = ("center", "width", "amplitude", "offset")


def gaussian(x, center, width, amplitude, offset):
    x = np.asarray(x, dtype=float)
    return offset + amplitude * np.exp(-0.5 * ((x - center) / width) ** 2)


def _gauss_model(x, p):
    return gaussian(x, *p)


def _gauss_jac(x, p):
    c, w, a, _ = p
    d = x - c
    e = np.exp(-0.5 * (d / w) ** 2)
    return np.column_stack([a * e * d / w ** 2, a * e * d ** 2 / w ** 3, e, np.ones_like(x)])


def _moments(series: WeightedSeries):
    x, y = series.x, series.y
    base = float(y.min())
    h = y - base
    if h.sum() <= 0:
        return [float(x.mean()), float(x.std() or 1.0), 0.0, base]
    c = float((x * h).sum() / h.sum())
    w = float(math.sqrt(max(((x - c) ** 2 * h).sum() / h.sum(), 1e-300)))
    return [c, w, float(h.max()), base]


def fit_gaussian(series: WeightedSeries) -> FitResult:
    """Fit ``offset + a exp(-(x - c)^2 / (2 w^2))``, started from weighted moments.

    ``extras`` carries ``fwhm`` and ``fwhm_err``.
    """
    if len(series) < 5:
        raise InvalidParameterError("need at least 5 points")
    p, cov, chi2, ok, it = levenberg_marquardt(_gauss_model, _gauss_jac, _moments(series), series)
    p[1] = abs(p[1])
    res = FitResult(p, cov, chi2, ok, GAUSSIAN_NAMES, it, len(series) - 4)
    res.extras["fwhm"] = FWHM_PER_SIGMA * p[1]
    res.extras["fwhm_err"] = FWHM_PER_SIGMA * res.errors[1]
    return res
