"""Two-state Markov regime: transition estimation, simulation, Gaussian HMM, pricing.

State 0 is the neutral/anti-ESG regime and state 1 the pro-ESG regime. When
states are inferred by :func:`hmm_fit` the labels are ordered by emission
mean, so state 1 is the higher-mean regime.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, as_rng, check_positive_int, check_series, check_state

VARIANCE_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic 2x2 matrix, ``p[i, j] = P(D_{t+1} = j | D_t = i)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2):
            raise ValueError(f"transition matrix must be 2x2, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError(f"transition rows must sum to 1, got {p.sum(axis=1)}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_persistence(cls, p00, p11):
        return cls(np.array([[p00, 1.0 - p00], [1.0 - p11, p11]]))

    def to_json(self):
        return json.dumps(self.p.tolist())

    @classmethod
    def from_json(cls, text):
        return cls(np.asarray(json.loads(text), dtype=float))

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(self.p, other.p)

    def __repr__(self):
        return f"TransitionMatrix({self.p.tolist()})"


@dataclass(frozen=True, eq=False)
class RegimePath:
    states: np.ndarray
    dates: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.states)
        if s.ndim != 1 or not np.all(np.isin(s, (0, 1))):
            raise DataError("regime states must be a 1-d sequence of 0/1 values")
        object.__setattr__(self, "states", s.astype(np.int64))

    def __len__(self):
        return self.states.size


@dataclass(frozen=True)
class RegimePricing:
    """Market price of risk ``lambda(d) = lambda0 + lambda1 * d``."""

    lambda0: float
    lambda1: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda0) and math.isfinite(self.lambda1)):
            raise ValueError("market price of risk parameters must be finite")


def price_of_risk(pricing, d):
    return pricing.lambda0 + pricing.lambda1 * check_state(d, "d")


def estimate_transitions(path, smoothing=False):
    """Maximum-likelihood transition counts ``n_ij / sum_j n_ij``.

    A state never observed as a source leaves its row undefined; with
    ``smoothing=True`` one pseudo-count is added to every cell instead.
    """
    states = path.states if isinstance(path, RegimePath) else RegimePath(path).states
    if states.size < 2:
        raise DataError("need at least two observations to count transitions")
    counts = np.zeros((2, 2))
    np.add.at(counts, (states[:-1], states[1:]), 1.0)
    if smoothing:
        counts += 1.0
    rows = counts.sum(axis=1)
    if np.any(rows == 0):
        missing = int(np.argmin(rows))
        raise DataError(f"state {missing} never occurs as a source; set smoothing=True")
    return TransitionMatrix(counts / rows[:, None])


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray
    unique: bool


def stationary_distribution(tm):
    """Left eigenvector for eigenvalue 1: ``(p10, p01) / (p01 + p10)``.

    The identity matrix has every distribution stationary; it is returned as
    ``(0.5, 0.5)`` with ``unique=False``.
    """
    p01, p10 = tm.p[0, 1], tm.p[1, 0]
    total = p01 + p10
    if total == 0:
        return StationaryDistribution(np.array([0.5, 0.5]), unique=False)
    return StationaryDistribution(np.array([p10 / total, p01 / total]), unique=True)


def simulate_chain(tm, d0, n, seed=None):
    """Path of ``n`` states starting at ``d0``."""
    n = check_positive_int(n, "n")
    d = check_state(d0, "d0")
    u = as_rng(seed).random(n - 1)
    states = np.empty(n, dtype=np.int64)
    states[0] = d
    stay = tm.p[[0, 1], [0, 1]]
    for t in range(1, n):
        d = d if u[t - 1] < stay[d] else 1 - d
        states[t] = d
    return RegimePath(states)


def sojourn_lengths(states, state):
    """Lengths of consecutive runs of ``state`` (runs cut by the sample end included)."""
    s = np.asarray(states)
    padded = np.concatenate([[False], s == state, [False]]).astype(np.int8)
    edges = np.diff(padded)
    return np.nonzero(edges == -1)[0] - np.nonzero(edges == 1)[0]


# --------------------------------------------------------------------------
# two-state Gaussian hidden Markov model


@dataclass
class HmmResult:
    transition: TransitionMatrix
    means: np.ndarray
    variances: np.ndarray
    initial: np.ndarray
    smoothed: np.ndarray
    viterbi: RegimePath
    loglik_path: list
    converged: bool
    identifiable: bool

    @property
    def loglik(self):
        return self.loglik_path[-1]


def _log_emission(x, means, variances):
    return -0.5 * (np.log(2.0 * np.pi * variances)[None, :] + (x[:, None] - means[None, :]) ** 2 / variances[None, :])


def _forward_backward(logb, p, init):
    """Scaled forward-backward pass; returns log-likelihood, state and pair posteriors."""
    T = logb.shape[0]
    shift = logb.max(axis=1)
    b = np.exp(logb - shift[:, None])
    alpha = np.empty((T, 2))
    scale = np.empty(T)
    a = init * b[0]
    scale[0] = a.sum()
    alpha[0] = a / scale[0]
    for t in range(1, T):
        a = (alpha[t - 1] @ p) * b[t]
        scale[t] = a.sum()
        alpha[t] = a / scale[t]
    beta = np.ones((T, 2))
    for t in range(T - 2, -1, -1):
        beta[t] = p @ (b[t + 1] * beta[t + 1]) / scale[t + 1]
    loglik = float(np.sum(np.log(scale)) + shift.sum())
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    nxt = b[1:] * beta[1:] / scale[1:, None]
    xi = alpha[:-1, :, None] * p[None, :, :] * nxt[:, None, :]
    return loglik, gamma, xi


def _viterbi(logb, log_p, log_init):
    T = logb.shape[0]
    delta = log_init + logb[0]
    back = np.zeros((T, 2), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + log_p
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], [0, 1]] + logb[t]
    path = np.empty(T, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def _safe_log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def hmm_fit(series, means=None, variances=None, transition=None, max_iter=500, tol=1e-8):
    """Baum-Welch EM for a two-state Gaussian HMM plus Viterbi decoding.

    Initial guesses default to the lower and upper sample quartiles for the
    means, the sample variance for both states, and persistence 0.9.
    Variances are floored at ``1e-10``. The returned ``loglik_path`` holds
    the log-likelihood before every M-step and after the last one; EM makes
    it non-decreasing.
    """
    x = check_series(series, "series", min_length=100)
    mu = np.array(means if means is not None else np.quantile(x, [0.25, 0.75]), dtype=float)
    var = np.array(variances if variances is not None else [np.var(x)] * 2, dtype=float)
    var = np.maximum(var, VARIANCE_FLOOR)
    p = (transition.p if transition is not None else np.array([[0.9, 0.1], [0.1, 0.9]])).copy()
    init = np.array([0.5, 0.5])

    lls = []
    converged = False
    for _ in range(max_iter):
        logb = _log_emission(x, mu, var)
        ll, gamma, xi = _forward_backward(logb, p, init)
        lls.append(ll)
        if len(lls) > 1 and abs(lls[-1] - lls[-2]) <= tol * max(1.0, abs(lls[-1])):
            converged = True
            break
        occupancy = gamma.sum(axis=0)
        mu = gamma.T @ x / occupancy
        var = np.maximum((gamma * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / occupancy, VARIANCE_FLOOR)
        trans = xi.sum(axis=0)
        p = trans / trans.sum(axis=1, keepdims=True)
        init = gamma[0]

    if converged is False:
        logb = _log_emission(x, mu, var)
        ll, gamma, _ = _forward_backward(logb, p, init)
        lls.append(ll)

    order = np.argsort(mu, kind="stable")
    mu, var, init = mu[order], var[order], init[order]
    p = p[np.ix_(order, order)]
    p = p / p.sum(axis=1, keepdims=True)
    gamma = gamma[:, order]
    logb = _log_emission(x, mu, var)
    path = _viterbi(logb, _safe_log(p), _safe_log(init))
    spread = math.sqrt(float(np.max(var)))
    identifiable = bool(abs(mu[1] - mu[0]) > 1e-3 * spread or abs(math.log(var[1] / var[0])) > 1e-3)
    return HmmResult(
        transition=TransitionMatrix(p),
        means=mu,
        variances=var,
        initial=init,
        smoothed=gamma,
        viterbi=RegimePath(path),
        loglik_path=lls,
        converged=converged,
        identifiable=identifiable,
    )


def simulate_hmm(tm, means, stds, n, seed=None, d0=0):
    """Gaussian observations driven by a simulated chain; returns ``(x, states)``."""
    rng = as_rng(seed)
    path = simulate_chain(tm, d0, n, rng)
    means, stds = np.asarray(means, dtype=float), np.asarray(stds, dtype=float)
    x = means[path.states] + stds[path.states] * rng.standard_normal(n)
    return x, path.states


class GaussianRegimeHMM(BaseEstimator):
    """scikit-learn style wrapper around :func:`hmm_fit`.

    ``predict`` returns Viterbi states and ``predict_proba`` smoothed
    probabilities for a new series under the fitted parameters.
    """

    def __init__(self, max_iter=500, tol=1e-8, init_means=None, init_variances=None):
        self.max_iter = max_iter
        self.tol = tol
        self.init_means = init_means
        self.init_variances = init_variances

    def fit(self, X, y=None):
        res = hmm_fit(X, self.init_means, self.init_variances, max_iter=self.max_iter, tol=self.tol)
        self.result_ = res
        self.transmat_ = res.transition.p
        self.means_ = res.means
        self.variances_ = res.variances
        self.startprob_ = res.initial
        return self

    def _logb(self, X):
        return _log_emission(check_series(X, "X"), self.means_, self.variances_)

    def predict(self, X):
        check_is_fitted(self, "result_")
        return _viterbi(self._logb(X), _safe_log(self.transmat_), _safe_log(self.startprob_))

    def predict_proba(self, X):
        check_is_fitted(self, "result_")
        _, gamma, _ = _forward_backward(self._logb(X), self.transmat_, self.startprob_)
        return gamma

    def score(self, X, y=None):
        check_is_fitted(self, "result_")
        ll, _, _ = _forward_backward(self._logb(X), self.transmat_, self.startprob_)
        return ll
