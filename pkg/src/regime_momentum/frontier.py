"""Scenario-based long-only efficient frontiers: mean-variance and mean-CVaR.

Scenarios are one-step-ahead ARMA-GARCH draws with NIG innovations, tied
across assets by a Gaussian copula. Mean-variance points maximise
``mu'w - kappa/2 w'Sw`` over the simplex with an exact active-set solver,
with ``kappa`` bisected to hit each target volatility. Mean-CVaR
points solve the auxiliary-variable linear programme (threshold plus
per-scenario shortfalls) with HiGHS.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse, stats

from ._validation import DataError, NumericalError, as_rng, check_positive_int
from .risk_metrics import avar_empirical
from .vol_models.nig import NigParams, NigQuantile

RIDGE = 1e-10
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """``returns[s, k]``: scenario ``s`` for asset ``k``; equal scenario probabilities."""

    returns: np.ndarray
    asset_ids: tuple = ()

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.returns, dtype=float))
        S, K = r.shape
        if S < K + 1:
            raise DataError(f"need more scenarios than assets, got S={S}, K={K}")
        if not np.all(np.isfinite(r)):
            raise DataError("scenario returns must be finite")
        ids = tuple(self.asset_ids) or tuple(f"asset{k}" for k in range(K))
        if len(ids) != K:
            raise DataError("asset_ids length does not match scenario columns")
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "asset_ids", ids)

    @property
    def n_scenarios(self):
        return self.returns.shape[0]

    @property
    def n_assets(self):
        return self.returns.shape[1]

    @property
    def probabilities(self):
        return np.full(self.n_scenarios, 1.0 / self.n_scenarios)

    def mean(self):
        return self.returns.mean(axis=0)

    def covariance(self):
        return np.atleast_2d(np.cov(self.returns, rowvar=False))


@dataclass(frozen=True, eq=False)
class FrontierPoint:
    risk: float
    expected_return: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise NumericalError(f"weights leave the simplex: min={w.min()}, sum={w.sum()}")
        object.__setattr__(self, "weights", w)


@dataclass
class FrontierCurve:
    points: list
    tangency: FrontierPoint
    risk_free: float
    risk_measure: str
    flags: dict = field(default_factory=dict)

    @property
    def risks(self):
        return np.array([p.risk for p in self.points])

    @property
    def returns(self):
        return np.array([p.expected_return for p in self.points])

    def capital_market_line(self, risks):
        """Ray from the risk-free rate through the tangency point."""
        slope = (self.tangency.expected_return - self.risk_free) / self.tangency.risk if self.tangency.risk > 0 else 0.0
        return self.risk_free + slope * np.asarray(risks, dtype=float)

    def is_monotone(self, slack=1e-10):
        r, m = self.risks, self.returns
        return bool(np.all(np.diff(r) >= -slack) and np.all(np.diff(m) >= -slack))

    def write_csv(self, path, asset_ids=None):
        K = self.points[0].weights.size
        ids = asset_ids or tuple(f"w{k}" for k in range(K))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("risk", "expected_return", "tangency") + tuple(ids))
            for p in self.points + [self.tangency]:
                tag = 1 if p is self.tangency else 0
                writer.writerow((repr(p.risk), repr(p.expected_return), tag) + tuple(repr(float(w)) for w in p.weights))


# --------------------------------------------------------------------------
# scenario generation


def rank_correlation_to_gaussian(innovations):
    """Gaussian-copula correlation from Spearman ranks, ``r = 2 sin(pi rho / 6)``.

    The result is projected to the nearest correlation matrix with
    eigenvalues at least ``1e-8``.
    """
    X = np.asarray(innovations, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        return np.eye(1 if X.ndim < 2 else X.shape[1])
    rho = stats.spearmanr(X).statistic
    if np.ndim(rho) == 0:  # two columns come back as a scalar
        rho = np.array([[1.0, rho], [rho, 1.0]])
    r = 2.0 * np.sin(np.pi * rho / 6.0)
    vals, vecs = np.linalg.eigh(r)
    r = (vecs * np.maximum(vals, 1e-8)) @ vecs.T
    d = np.sqrt(np.diag(r))
    r = r / np.outer(d, d)
    np.fill_diagonal(r, 1.0)
    return r


def build_scenarios(params, n_scenarios=10000, seed=None, correlation=None, state=None, asset_ids=()):
    """One-step-ahead scenario returns for each asset.

    ``params`` is a sequence of ``(ArmaGarchParams, NigParams | None)``
    pairs; ``None`` means Gaussian innovations. ``state`` optionally holds a
    ``(last_return, last_shock, last_variance)`` triple per asset; by
    default each asset sits at its stationary point with a zero last shock.
    """
    S = check_positive_int(n_scenarios, "n_scenarios")
    if S < 100:
        raise ValueError(f"at least 100 scenarios are required, got {S}")
    K = len(params)
    if K == 0:
        raise ValueError("no assets")
    corr = np.eye(K) if correlation is None else np.asarray(correlation, dtype=float)
    if corr.shape != (K, K):
        raise ValueError("correlation shape does not match the number of assets")
    rng = as_rng(seed)
    chol = np.linalg.cholesky(corr + 1e-12 * np.eye(K))
    g = rng.standard_normal((S, K)) @ chol.T
    u = stats.norm.cdf(g)
    out = np.empty((S, K))
    for k, (arma, nig) in enumerate(params):
        if nig is None:
            z = g[:, k]
        elif isinstance(nig, NigParams):
            z = NigQuantile(nig)(u[:, k])
        else:
            raise TypeError("innovation law must be NigParams or None")
        if state is None:
            x_prev, e_prev = arma.unconditional_mean(), 0.0
            h_prev = arma.unconditional_variance() or arma.omega
        else:
            x_prev, e_prev, h_prev = state[k]
        h = arma.omega + arma.alpha * e_prev**2 + arma.beta * h_prev
        out[:, k] = arma.mu + arma.ar * x_prev + arma.ma * e_prev + math.sqrt(h) * z
    return ScenarioSet(out, asset_ids)


# --------------------------------------------------------------------------
# mean-variance


def project_simplex(v):
    """Euclidean projection onto ``{w >= 0, sum w = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def simplex_qp(mu, Q, w0=None, max_iter=500):
    """Exact maximiser of ``mu'w - w'Qw/2`` over the simplex (primal active set).

    Each iteration solves the equality-constrained KKT system on the free
    coordinates; a step that would leave the simplex is shortened and the
    blocking coordinate pinned at zero, and a pinned coordinate with a
    positive multiplier is released. ``Q`` must be positive semidefinite.
    """
    mu = np.asarray(mu, dtype=float)
    K = mu.size
    w = project_simplex(np.full(K, 1.0 / K) if w0 is None else w0)
    pinned = w <= 0.0
    for _ in range(max_iter):
        free = np.flatnonzero(~pinned)
        n = free.size
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = Q[np.ix_(free, free)]
        kkt[:n, n] = kkt[n, :n] = 1.0
        rhs = np.concatenate([mu[free], [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        target = np.zeros(K)
        if np.max(np.abs(kkt @ sol - rhs)) > 1e-10 * max(1.0, np.max(np.abs(rhs))):
            # singular face with no stationary point: climb a flat direction
            _, sv, vt = np.linalg.svd(np.vstack([kkt[:n, :n], np.ones(n)]))
            null = vt[np.sum(sv > 1e-12 * max(1.0, sv[0])):]
            target[free] = w[free] + null.T @ (null @ mu[free])
        else:
            target[free] = sol[:n]
        nu = sol[n]
        if np.all(target[free] >= -1e-15) and np.allclose(target[free], sol[:n]):
            w = np.maximum(target, 0.0)
            w /= w.sum()
            mult = mu - Q @ w - nu
            mult[~pinned] = -np.inf
            j = int(np.argmax(mult))
            if mult[j] <= 1e-15 * max(1.0, float(np.max(np.abs(mu)))):
                return w
            pinned[j] = False
            continue
        direction = target - w
        shrinking = free[direction[free] < 0]
        ratios = w[shrinking] / -direction[shrinking]
        k = int(np.argmin(ratios))
        w = np.maximum(w + ratios[k] * direction, 0.0)
        w[shrinking[k]] = 0.0
        w /= w.sum()
        pinned[shrinking[k]] = True
    raise NumericalError("simplex QP did not converge")


class _MeanVariance:
    def __init__(self, scenarios):
        self.mu = scenarios.mean()
        cov = scenarios.covariance()
        self.flags = {}
        if np.min(np.linalg.eigvalsh(cov)) <= 1e-14 * max(1.0, np.trace(cov)):
            cov = cov + RIDGE * np.eye(cov.shape[0])
            self.flags["ridge"] = RIDGE
        self.cov = cov
        self.K = self.mu.size

    def risk(self, w):
        return math.sqrt(max(float(w @ self.cov @ w), 0.0))

    def solve(self, kappa, w0=None):
        return simplex_qp(self.mu, kappa * self.cov, w0)

    def min_variance(self):
        return simplex_qp(np.zeros(self.K), self.cov)

    def max_mean(self):
        top = np.flatnonzero(self.mu >= self.mu.max() - 1e-15)
        w = np.zeros(self.K)
        # among tied best-mean assets take the least-variance mix
        w[top] = simplex_qp(np.zeros(top.size), self.cov[np.ix_(top, top)])
        return w

    def point(self, w):
        return FrontierPoint(self.risk(w), float(self.mu @ w), w)


def _kappa_for_risk(mv, target, lo, hi, w_hint):
    """Bisect ``log kappa`` so that the optimal portfolio's volatility hits ``target``."""
    w = w_hint
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        w = mv.solve(mid, w)
        if mv.risk(w) > target:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-10:
            break
    return w


def mv_frontier(scenarios, n_points=50, risk_free=0.0):
    """Long-only mean-variance frontier on ``n_points`` volatility targets.

    Targets run from the minimum-variance portfolio to the highest-mean
    portfolio. The tangency portfolio maximises the Sharpe ratio over the
    curve (golden-section search in ``log kappa``).
    """
    n_points = check_positive_int(n_points, "n_points")
    mv = _MeanVariance(scenarios)
    w_min, w_max = mv.min_variance(), mv.max_mean()
    lo_risk, hi_risk = mv.risk(w_min), mv.risk(w_max)
    if mv.K == 1 or hi_risk - lo_risk <= 1e-14 or float(mv.mu @ w_max - mv.mu @ w_min) <= 1e-15:
        p = mv.point(w_max if mv.K > 1 else np.ones(1))
        return FrontierCurve([p], p, risk_free, "std_dev", mv.flags)

    # kappa bracket: tiny kappa -> max-mean corner, huge kappa -> min-variance
    scale = max(abs(float(mv.mu @ w_max - mv.mu @ w_min)), 1e-300) / max(hi_risk**2 - lo_risk**2, 1e-300)
    k_lo, k_hi = scale * 1e-8, scale * 1e8
    pts = [mv.point(w_min)]
    w = w_min
    for target in np.linspace(lo_risk, hi_risk, n_points)[1:-1]:
        w = _kappa_for_risk(mv, target, k_lo, k_hi, w)
        pts.append(mv.point(w))
    pts.append(mv.point(w_max))
    pts.sort(key=lambda p: p.risk)
    pts = _enforce_efficiency(pts)

    def sharpe(p):
        return (p.expected_return - risk_free) / p.risk if p.risk > 0 else -math.inf

    best = max(pts, key=sharpe)
    a, b = math.log(k_lo), math.log(k_hi)
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    pc, pd_ = mv.point(mv.solve(math.exp(c))), mv.point(mv.solve(math.exp(d)))
    for _ in range(80):
        if sharpe(pc) > sharpe(pd_):
            b, d, pd_ = d, c, pc
            c = b - GOLDEN * (b - a)
            pc = mv.point(mv.solve(math.exp(c), pd_.weights))
        else:
            a, c, pc = c, d, pd_
            d = a + GOLDEN * (b - a)
            pd_ = mv.point(mv.solve(math.exp(d), pc.weights))
    for cand in (pc, pd_):
        if sharpe(cand) > sharpe(best):
            best = cand
    return FrontierCurve(pts, best, risk_free, "std_dev", mv.flags)


def _enforce_efficiency(points, slack=1e-10):
    """Drop points dominated by a lower-risk point (numerical noise at the flat end)."""
    kept = [points[0]]
    for p in points[1:]:
        if p.expected_return >= kept[-1].expected_return - slack:
            kept.append(p)
    return kept


# --------------------------------------------------------------------------
# mean-CVaR


def _cvar_lp(scenarios, level, objective, bound=None):
    """Solve the auxiliary-variable LP over ``(w, threshold, shortfall)``.

    ``objective='min_cvar'`` minimises CVaR; ``objective='max_mean'``
    maximises the mean subject to ``CVaR <= bound``.
    """
    R = scenarios.returns
    S, K = R.shape
    tail = 1.0 - level
    coef = 1.0 / (S * tail)
    cvar_row = np.concatenate([np.zeros(K), [1.0], np.full(S, coef)])
    # shortfall_s >= -R_s w - threshold  <=>  -R_s w - threshold - shortfall_s <= 0
    A_ub = sparse.hstack([sparse.csr_matrix(-R), -np.ones((S, 1)), -sparse.identity(S)], format="csr")
    b_ub = np.zeros(S)
    if objective == "min_cvar":
        c = cvar_row
    else:
        c = np.concatenate([-scenarios.mean(), np.zeros(1 + S)])
        A_ub = sparse.vstack([A_ub, cvar_row], format="csr")
        b_ub = np.concatenate([b_ub, [bound]])
    A_eq = np.concatenate([np.ones(K), np.zeros(1 + S)])[None, :]
    bounds = [(0, None)] * K + [(None, None)] + [(0, None)] * S
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise NumericalError(f"CVaR linear programme failed: {res.message}")
    w = np.maximum(res.x[:K], 0.0)
    return w / w.sum()


def portfolio_cvar(scenarios, weights, level):
    """Empirical CVaR of the portfolio loss at confidence ``level``."""
    return avar_empirical(scenarios.returns @ np.asarray(weights, dtype=float), 1.0 - level)


def min_cvar_portfolio(scenarios, level):
    return _cvar_lp(scenarios, level, "min_cvar")


def max_return_given_cvar(scenarios, level, bound):
    """Highest-mean long-only portfolio with CVaR at most ``bound``."""
    w = _cvar_lp(scenarios, level, "max_mean", bound)
    if w is None:
        w_min = min_cvar_portfolio(scenarios, level)
        raise DataError(
            f"CVaR bound {bound:.6g} is below the minimum achievable {portfolio_cvar(scenarios, w_min, level):.6g}"
        )
    return FrontierPoint(portfolio_cvar(scenarios, w, level), float(scenarios.mean() @ w), w)


def cvar_frontier(scenarios, level=0.95, n_points=50, risk_free=0.0):
    """Long-only mean-CVaR frontier from the minimum-CVaR portfolio to the highest-mean one."""
    if level not in (0.95, 0.99) and not 0.5 <= level < 1:
        raise ValueError(f"unsupported confidence level {level}")
    if scenarios.n_scenarios * (1.0 - level) < 1.0 - 1e-12:
        raise DataError(f"{scenarios.n_scenarios} scenarios leave an empty {level:g} tail")
    n_points = check_positive_int(n_points, "n_points")
    mu = scenarios.mean()
    w_min = min_cvar_portfolio(scenarios, level)
    top = np.flatnonzero(mu >= mu.max() - 1e-15)
    if top.size == 1:
        w_top = np.zeros(mu.size)
        w_top[top[0]] = 1.0
    else:
        sub = ScenarioSet(scenarios.returns[:, top]) if scenarios.n_scenarios > top.size else None
        w_top = np.zeros(mu.size)
        w_top[top] = min_cvar_portfolio(sub, level) if sub is not None else 1.0 / top.size
    lo = portfolio_cvar(scenarios, w_min, level)
    hi = portfolio_cvar(scenarios, w_top, level)
    pts = [FrontierPoint(lo, float(mu @ w_min), w_min)]
    if hi > lo + 1e-14:
        for bound in np.linspace(lo, hi, n_points)[1:]:
            pts.append(max_return_given_cvar(scenarios, level, bound + 1e-12))
    pts.sort(key=lambda p: p.risk)
    pts = _enforce_efficiency(pts)

    def reward_to_risk(p):
        return (p.expected_return - risk_free) / p.risk if p.risk > 0 else -math.inf

    return FrontierCurve(pts, max(pts, key=reward_to_risk), risk_free, f"cvar{level:g}")
