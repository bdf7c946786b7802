"""ARFIMA(1,d,1)-FIGARCH(1,d,1) filtering, simulation and quasi-likelihood fitting.

Variance equation in ARCH(inf) form::

    sigma2_t = omega / (1 - beta) + sum_{k>=1} lambda_k * e_{t-k}**2
    lambda(L) = 1 - (1 - beta L)**-1 * (1 - phi L) * (1 - L)**d_vol

with ``phi = alpha + beta``, so ``d_vol = 0`` collapses to GARCH(1,1) with
ARCH coefficient ``alpha``. The expansion is truncated at ``truncation_lag``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import optimize, signal
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import NumericalError, as_rng, check_positive_int, check_series
from .garch import gaussian_loglik, variance_backcast

# admissible box used by the fit (inclusive bounds)
BOX = {
    "mu": (-math.inf, math.inf),
    "ar": (-0.999, 0.999),
    "ma": (-0.999, 0.999),
    "d_mean": (0.0, 0.999),
    "omega": (1e-14, math.inf),
    "alpha": (0.0, 1.0),
    "beta": (-0.999, 0.999),
    "d_vol": (0.0, 1.0),
}
FIT_ORDER = ("mu", "ar", "ma", "d_mean", "omega", "alpha", "beta", "d_vol")


@dataclass(frozen=True)
class ArfimaFigarchParams:
    mu: float = 0.0
    ar: float = 0.0
    ma: float = 0.0
    d_mean: float = 0.0
    omega: float = 1e-5
    alpha: float = 0.1
    beta: float = 0.5
    d_vol: float = 0.4
    truncation_lag: int = 1000

    def __post_init__(self):
        for name in FIT_ORDER:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not 0.0 <= self.d_mean < 1.0:
            raise ValueError(f"d_mean must lie in [0, 1), got {self.d_mean}")
        if not 0.0 <= self.d_vol <= 1.0:
            raise ValueError(f"d_vol must lie in [0, 1], got {self.d_vol}")
        if not 1.0 - self.beta > 0:
            raise ValueError("beta must be below 1")
        if int(self.truncation_lag) != self.truncation_lag or self.truncation_lag < 50:
            raise ValueError(f"truncation_lag must be an integer >= 50, got {self.truncation_lag}")

    def to_dict(self):
        return asdict(self)

    def in_box(self):
        return all(BOX[n][0] <= getattr(self, n) <= BOX[n][1] for n in FIT_ORDER)


def fractional_diff_weights(d, lag):
    """Coefficients ``w_0 .. w_lag`` of ``(1 - L)**d``; ``w_k = w_{k-1}(k-1-d)/k``."""
    lag = check_positive_int(lag, "lag")
    w = np.empty(lag + 1)
    w[0] = 1.0
    # sequential on purpose: same rounding as the textbook recursion
    for k in range(1, lag + 1):
        w[k] = w[k - 1] * (k - 1 - d) / k
    return w


def figarch_weights(params):
    """ARCH(inf) weights ``lambda_0 .. lambda_lag`` (``lambda_0 = 0``)."""
    L = params.truncation_lag
    frac = fractional_diff_weights(params.d_vol, L)
    phi = params.alpha + params.beta
    c = frac.copy()
    c[1:] -= phi * frac[:-1]
    q = signal.lfilter([1.0], [1.0, -params.beta], c)
    lam = -q
    lam[0] = 0.0
    return lam


def _backcast_level(residuals, params):
    if params.d_vol == 0 and params.alpha + params.beta < 1:
        return params.omega / (1.0 - params.alpha - params.beta)
    return variance_backcast(residuals)


def _variance_from_weights(e2, lam, intercept, backcast):
    L = lam.size - 1
    ext = np.concatenate([np.full(L, backcast), e2])
    conv = np.convolve(ext, lam[1:])
    return intercept + conv[L - 1 : L - 1 + e2.size]


def figarch_variance_filter(residuals, params):
    """Conditional variances of ``residuals`` under the FIGARCH(1,d,1) recursion.

    Pre-sample squared residuals are set to the unconditional variance in
    the GARCH special case and to the sample variance of the first 50
    residuals otherwise. Raises :class:`NumericalError` when the weights
    produce a non-positive variance.
    """
    eps = check_series(residuals, "residuals", min_length=max(1, params.truncation_lag // 4))
    lam = figarch_weights(params)
    sigma2 = _variance_from_weights(eps**2, lam, params.omega / (1.0 - params.beta), _backcast_level(eps, params))
    if not np.all(sigma2 > 0):
        raise NumericalError("FIGARCH weights produce a non-positive conditional variance")
    return sigma2


def arfima_residuals(series, params):
    """Innovations of ``(1 - ar L)(1 - L)**d (x - mu) = (1 + ma L) e``.

    The fractional filter uses only in-sample history (zero pre-sample).
    """
    x = np.asarray(series, dtype=float) - params.mu
    if params.d_mean == 0:
        y = x
    else:
        w = fractional_diff_weights(params.d_mean, min(params.truncation_lag, x.size))
        y = np.convolve(x, w)[: x.size]
    u = y.copy()
    u[1:] -= params.ar * y[:-1]
    return signal.lfilter([1.0], [1.0, params.ma], u)


def arfima_figarch_filter(series, params):
    """Residuals and conditional variances for a return series."""
    eps = arfima_residuals(check_series(series, "series"), params)
    return eps, figarch_variance_filter(eps, params)


def arfima_figarch_loglik(series, params):
    eps, sigma2 = arfima_figarch_filter(series, params)
    return gaussian_loglik(eps, sigma2)


def arfima_figarch_simulate(params, n, seed=None, burn=None, return_variance=False):
    """Simulate a return path of length ``n`` (Gaussian innovations).

    ``burn`` extra periods (default: the truncation lag) are discarded so the
    long-memory buffer is filled by simulated shocks.
    """
    n = check_positive_int(n, "n")
    rng = as_rng(seed)
    lam = figarch_weights(params)
    L = lam.size - 1
    burn = L if burn is None else int(burn)
    total = n + burn
    intercept = params.omega / (1.0 - params.beta)
    start = intercept / max(1.0 - lam.sum(), 0.05)
    rev = lam[1:][::-1].copy()
    e2 = np.full(L + total, start)
    eps = np.empty(total)
    sigma2 = np.empty(total)
    z = rng.standard_normal(total)
    for t in range(total):
        s2 = intercept + rev @ e2[t : t + L]
        if not s2 > 0:
            raise NumericalError("simulated FIGARCH variance turned non-positive")
        sigma2[t] = s2
        eps[t] = math.sqrt(s2) * z[t]
        e2[L + t] = eps[t] ** 2
    u = eps.copy()
    u[1:] += params.ma * eps[:-1]
    y = signal.lfilter([1.0], [1.0, -params.ar], u)
    if params.d_mean > 0:
        w = fractional_diff_weights(-params.d_mean, min(L, total))
        y = np.convolve(y, w)[:total]
    x = params.mu + y
    if return_variance:
        return x[burn:], sigma2[burn:]
    return x[burn:]


@dataclass
class FigarchFitResult:
    params: ArfimaFigarchParams
    loglik: float
    converged: bool
    n_evaluations: int


def _pack(params):
    vec = [getattr(params, n) for n in FIT_ORDER]
    vec[FIT_ORDER.index("omega")] = math.log(params.omega)
    return np.array(vec, dtype=float)


def _unpack(vec, lag):
    vals = dict(zip(FIT_ORDER, vec))
    vals["omega"] = math.exp(min(vals["omega"], 50.0))
    clamped = {n: min(max(v, BOX[n][0]), BOX[n][1]) for n, v in vals.items()}
    distance = sum(abs(clamped[n] - vals[n]) for n in FIT_ORDER)
    return ArfimaFigarchParams(truncation_lag=lag, **clamped), distance


def arfima_figarch_fit(series, init, max_iter=20000, tol=1e-8, max_restarts=20):
    """Gaussian quasi-maximum-likelihood fit by restarted Nelder-Mead.

    The search runs on ``(mu, ar, ma, d_mean, log omega, alpha, beta, d_vol)``;
    trial points outside the admissible box are clamped and penalised. The
    simplex is restarted from the incumbent until a restart improves the
    log-likelihood by less than ``tol``. When the evaluation budget runs
    out first, the best point so far is returned with ``converged=False``.
    """
    x = check_series(series, "series", min_length=500)
    if not init.in_box():
        raise ValueError(f"initial parameters lie outside the admissible box: {init}")
    lag = init.truncation_lag

    def objective(vec):
        params, distance = _unpack(vec, lag)
        try:
            ll = arfima_figarch_loglik(x, params)
        except NumericalError:
            return 1e12 + 1e6 * distance
        if not math.isfinite(ll):
            return 1e12 + 1e6 * distance
        return -ll + 1e6 * distance

    best = _pack(init)
    best_val = objective(best)
    evaluations = 0
    converged = False
    for _ in range(max_restarts):
        budget = max_iter - evaluations
        if budget <= 0:
            break
        res = optimize.minimize(
            objective, best, method="Nelder-Mead",
            options={"maxfev": budget, "xatol": 1e-9, "fatol": 1e-11, "adaptive": True},
        )
        evaluations += res.nfev
        improvement = best_val - res.fun
        if res.fun < best_val:
            best, best_val = res.x, res.fun
        if improvement < tol:
            converged = True
            break
    if not converged:
        warnings.warn("ARFIMA-FIGARCH fit stopped before convergence; returning best point", RuntimeWarning)
    params, _ = _unpack(best, lag)
    return FigarchFitResult(params, arfima_figarch_loglik(x, params), converged, evaluations)


class ArfimaFigarch(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` a return series, ``transform`` to conditional variances."""

    def __init__(self, init=None, truncation_lag=1000, max_iter=20000):
        self.init = init
        self.truncation_lag = truncation_lag
        self.max_iter = max_iter

    def fit(self, X, y=None):
        x = check_series(X, "X")
        init = self.init or ArfimaFigarchParams(
            mu=float(np.mean(x)), omega=max(0.05 * float(np.var(x)), 1e-12), truncation_lag=self.truncation_lag
        )
        if init.truncation_lag != self.truncation_lag:
            init = replace(init, truncation_lag=self.truncation_lag)
        result = arfima_figarch_fit(x, init, max_iter=self.max_iter)
        self.params_ = result.params
        self.loglik_ = result.loglik
        self.converged_ = result.converged
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        _, sigma2 = arfima_figarch_filter(check_series(X, "X"), self.params_)
        return sigma2

    def residuals(self, X):
        check_is_fitted(self, "params_")
        return arfima_residuals(check_series(X, "X"), self.params_)
