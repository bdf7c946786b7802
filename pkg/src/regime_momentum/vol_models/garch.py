"""ARMA(1,1)-GARCH(1,1) filtering, simulation and Gaussian quasi-likelihood fitting."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, signal

from .._validation import DataError, as_rng, check_positive_int, check_series
from .nig import NigParams, nig_sample

BACKCAST_WINDOW = 50


@dataclass(frozen=True)
class ArmaGarchParams:
    """``x_t = mu + ar*x_{t-1} + ma*e_{t-1} + e_t`` with
    ``h_t = omega + alpha*e_{t-1}**2 + beta*h_{t-1}``."""

    mu: float = 0.0
    ar: float = 0.0
    ma: float = 0.0
    omega: float = 1e-5
    alpha: float = 0.05
    beta: float = 0.9

    def __post_init__(self):
        if not all(math.isfinite(v) for v in asdict(self).values()):
            raise ValueError("ARMA-GARCH parameters must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.alpha + self.beta >= 1:
            warnings.warn(
                f"alpha + beta = {self.alpha + self.beta:.4f} >= 1: variance is not covariance-stationary",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def stationary(self):
        return self.alpha + self.beta < 1

    def unconditional_variance(self):
        return self.omega / (1.0 - self.alpha - self.beta) if self.stationary else None

    def unconditional_mean(self):
        return self.mu / (1.0 - self.ar) if abs(self.ar) < 1 else self.mu

    def to_dict(self):
        return asdict(self)


def variance_backcast(residuals, unconditional=None):
    """Pre-sample variance: the unconditional level when known, otherwise
    the mean squared residual over the first observations (residuals are
    zero-mean by construction, so no centring)."""
    if unconditional is not None:
        return float(unconditional)
    head = np.asarray(residuals[:BACKCAST_WINDOW], dtype=float)
    value = float(np.mean(head**2))
    if value <= 0:
        raise DataError("cannot backcast the variance from constant residuals")
    return value


def arma_residuals(x, mu, ar, ma):
    """Invert the ARMA(1,1) mean equation; the pre-sample state sits at the
    unconditional mean with a zero shock."""
    x = np.asarray(x, dtype=float)
    x_prev = np.empty_like(x)
    x_prev[0] = mu / (1.0 - ar) if abs(ar) < 1 else x[0]
    x_prev[1:] = x[:-1]
    u = x - mu - ar * x_prev
    return signal.lfilter([1.0], [1.0, ma], u)


def garch_variance(residuals, omega, alpha, beta, h0):
    h = np.empty(residuals.size)
    h[0] = h0
    if residuals.size > 1:
        drive = omega + alpha * residuals[:-1] ** 2
        h[1:] = signal.lfilter([1.0], [1.0, -beta], drive, zi=[beta * h0])[0]
    return h


def arma_garch_filter(series, params):
    """Residuals ``e_t`` and conditional variances ``h_t`` of ``series``.

    ``h_0`` is the unconditional variance when ``alpha + beta < 1`` and the
    sample variance of the first 50 residuals otherwise.
    """
    x = check_series(series, "series", min_length=10)
    eps = arma_residuals(x, params.mu, params.ar, params.ma)
    h0 = variance_backcast(eps, params.unconditional_variance())
    h = garch_variance(eps, params.omega, params.alpha, params.beta, h0)
    return eps, h


def _standard_innovations(innovation, size, rng):
    if innovation is None:
        return rng.standard_normal(size)
    if not isinstance(innovation, NigParams):
        raise TypeError("innovation must be NigParams or None for standard normal")
    return nig_sample(innovation, int(np.prod(size)), rng, standardize=True).reshape(size)


def arma_garch_simulate(params, innovation=None, horizon=1, n_paths=1, seed=None, return_variance=False):
    """Simulate ``n_paths`` return paths of length ``horizon``.

    Every path starts from the stationary state (unconditional mean and
    variance; ``omega`` itself when non-stationary). Innovations are
    standardized to mean 0, variance 1 before scaling by ``sqrt(h_t)``.
    """
    horizon = check_positive_int(horizon, "horizon")
    n_paths = check_positive_int(n_paths, "n_paths")
    rng = as_rng(seed)
    z = _standard_innovations(innovation, (n_paths, horizon), rng)
    h_prev = params.unconditional_variance() or params.omega
    e_prev = np.zeros(n_paths)
    x_prev = np.full(n_paths, params.unconditional_mean())
    h_prev = np.full(n_paths, h_prev)
    out = np.empty((n_paths, horizon))
    hs = np.empty((n_paths, horizon))
    for t in range(horizon):
        h = params.omega + params.alpha * e_prev**2 + params.beta * h_prev
        e = np.sqrt(h) * z[:, t]
        x = params.mu + params.ar * x_prev + params.ma * e_prev + e
        out[:, t], hs[:, t] = x, h
        x_prev, e_prev, h_prev = x, e, h
    return (out, hs) if return_variance else out


def gaussian_loglik(residuals, variances):
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * variances) + residuals**2 / variances))


def arma_garch_fit(series, init=None, max_iter=4000):
    """Gaussian QMLE of ARMA(1,1)-GARCH(1,1) by Nelder-Mead.

    Returns ``(params, loglik)``. ``omega`` is searched on a log scale and
    ``alpha + beta`` is kept below one.
    """
    x = check_series(series, "series", min_length=50)
    var = float(np.var(x))
    if var <= 0:
        raise DataError("constant series")
    init = init or ArmaGarchParams(mu=float(np.mean(x)), omega=0.1 * var, alpha=0.05, beta=0.85)
    theta0 = np.array([init.mu, init.ar, init.ma, math.log(init.omega), init.alpha, init.beta])

    def unpack(th):
        return th[0], th[1], th[2], math.exp(th[3]), th[4], th[5]

    def objective(th):
        mu, ar, ma, omega, alpha, beta = unpack(th)
        if abs(ar) >= 0.999 or abs(ma) >= 0.999 or alpha < 0 or beta < 0 or alpha + beta >= 0.9999:
            return 1e12
        eps = arma_residuals(x, mu, ar, ma)
        h = garch_variance(eps, omega, alpha, beta, omega / (1.0 - alpha - beta))
        if not np.all(h > 0) or not np.all(np.isfinite(h)):
            return 1e12
        return -gaussian_loglik(eps, h)

    res = optimize.minimize(
        objective, theta0, method="Nelder-Mead",
        options={"maxiter": max_iter, "xatol": 1e-8, "fatol": 1e-10, "adaptive": True},
    )
    mu, ar, ma, omega, alpha, beta = unpack(res.x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        params = ArmaGarchParams(mu, ar, ma, omega, alpha, beta)
    return params, -float(res.fun)
