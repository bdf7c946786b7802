"""Normal Inverse Gaussian innovations: sampling, moments, moment fitting, quantiles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .._validation import DataError, as_rng, check_positive_int, check_series


@dataclass(frozen=True)
class NigParams:
    """NIG(alpha, beta, mu, delta): tail heaviness, asymmetry, location, scale."""

    alpha: float
    beta: float
    mu: float
    delta: float

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.mu, self.delta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("NIG parameters must be finite")
        if self.delta <= 0:
            raise ValueError(f"NIG delta must be positive, got {self.delta}")
        if not self.alpha > abs(self.beta):
            raise ValueError(f"NIG requires alpha > |beta|, got alpha={self.alpha}, beta={self.beta}")

    @property
    def gamma(self):
        return math.sqrt(self.alpha**2 - self.beta**2)

    def mean(self):
        return self.mu + self.delta * self.beta / self.gamma

    def variance(self):
        return self.delta * self.alpha**2 / self.gamma**3

    def skewness(self):
        return 3.0 * self.beta / (self.alpha * math.sqrt(self.delta * self.gamma))

    def excess_kurtosis(self):
        return 3.0 * (1.0 + 4.0 * self.beta**2 / self.alpha**2) / (self.delta * self.gamma)

    def to_dict(self):
        return asdict(self)

    def _scipy(self):
        d = self.delta
        return stats.norminvgauss(self.alpha * d, self.beta * d, loc=self.mu, scale=d)


def nig_sample(params, n, seed=None, standardize=False):
    """Draw ``n`` NIG variates as an inverse-Gaussian variance-mean mixture.

    ``Y ~ IG(delta / gamma, delta**2)`` then ``X = mu + beta * Y + sqrt(Y) * Z``.
    With ``standardize=True`` the draws are shifted and scaled by the
    analytic mean and standard deviation.
    """
    n = check_positive_int(n, "n")
    rng = as_rng(seed)
    y = rng.wald(params.delta / params.gamma, params.delta**2, size=n)
    x = params.mu + params.beta * y + np.sqrt(y) * rng.standard_normal(n)
    if standardize:
        x = (x - params.mean()) / math.sqrt(params.variance())
    return x


def nig_fit_moments(sample):
    """Method-of-moments NIG fit from mean, variance, skewness and kurtosis.

    Feasibility requires excess kurtosis above ``5/3 * skew**2``; a sample
    outside that region (near-normal data in particular) raises
    :class:`DataError`.
    """
    x = check_series(sample, "sample", min_length=100)
    m = float(np.mean(x))
    dev = x - m
    v = float(np.mean(dev**2))
    if v <= 0:
        raise DataError("zero variance sample")
    s = float(np.mean(dev**3)) / v**1.5
    k = float(np.mean(dev**4)) / v**2 - 3.0
    if not (k > 0 and 3.0 * k > 5.0 * s * s):
        raise DataError(
            f"moments outside the NIG region (skew={s:.4g}, excess kurtosis={k:.4g})"
        )
    rho2 = s * s / (3.0 * k - 4.0 * s * s)  # (beta / alpha)**2
    delta_gamma = 3.0 * (1.0 + 4.0 * rho2) / k
    gamma = math.sqrt(delta_gamma / (v * (1.0 - rho2)))
    alpha = gamma / math.sqrt(1.0 - rho2)
    beta = math.copysign(math.sqrt(rho2), s) * alpha
    delta = delta_gamma / gamma
    mu = m - delta * beta / gamma
    return NigParams(alpha=alpha, beta=beta, mu=mu, delta=delta)


class NigQuantile:
    """Tabulated inverse CDF of a standardized NIG law.

    The density is integrated on a dense grid covering +-``width`` standard
    deviations and inverted by linear interpolation. Used to push copula
    uniforms through NIG margins without per-point root finding.
    """

    def __init__(self, params, n_grid=20001, width=40.0):
        self.params = params
        m, sd = params.mean(), math.sqrt(params.variance())
        grid = np.linspace(m - width * sd, m + width * sd, n_grid)
        pdf = params._scipy().pdf(grid)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self._cdf = cdf[keep]
        self._x = (grid[keep] - m) / sd

    def __call__(self, u):
        return np.interp(u, self._cdf, self._x)
