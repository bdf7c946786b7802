"""Empirical VaR / AVaR and reward-risk ratios for ranking return series.

Two level conventions are used on purpose:

* :func:`var_empirical` and :func:`avar_empirical` take ``gamma`` as the
  *tail probability*, ``VaR_gamma(X) = inf{m : P[X + m < 0] <= gamma}``, so
  ``gamma = 0.05`` looks at the worst 5% of outcomes.
* :class:`RatioSpec` levels are *confidence levels* as quoted in tables
  ("STARR(99%)"); the tail probability handed to the estimators is
  ``1 - level``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._validation import DataError, as_rng, check_positive_int, check_probability, check_series

#: Returned when the risk denominator is non-positive: the asset looks riskless.
RISKLESS = math.inf


class RatioKind(str, Enum):
    SHARPE = "sharpe"
    STARR = "starr"
    RACHEV = "rachev"
    CVAR = "cvar"
    CUMULATIVE = "cumulative"


@dataclass(frozen=True)
class RatioSpec:
    """Which reward-risk ratio to compute and at which confidence level(s).

    ``level_gamma`` is the confidence level of the loss tail (STARR, Rachev
    denominator, CVaR ratio); ``level_beta`` is the confidence level of the
    gain tail in the Rachev numerator. ``clip_reward`` applies the positive
    part to the numerator as in the textbook definitions; ranking defaults
    to the signed numerator so negative-mean assets stay ordered.
    """

    kind: RatioKind = RatioKind.STARR
    level_gamma: float | None = 0.95
    level_beta: float | None = None
    clip_reward: bool = False

    def __post_init__(self):
        kind = RatioKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (RatioKind.SHARPE, RatioKind.CUMULATIVE):
            return
        if self.level_gamma is None:
            raise ValueError(f"{kind.value} ratio requires level_gamma")
        check_probability(self.level_gamma, "level_gamma", closed_high=False)
        if kind is RatioKind.RACHEV:
            if self.level_beta is None:
                raise ValueError("Rachev ratio requires both level_beta and level_gamma")
            check_probability(self.level_beta, "level_beta", closed_high=False)

    @property
    def label(self):
        pct = lambda v: f"{100 * v:g}%"  # noqa: E731
        if self.kind is RatioKind.SHARPE:
            return "Sharpe"
        if self.kind is RatioKind.CUMULATIVE:
            return "Cumulative Return"
        if self.kind is RatioKind.RACHEV:
            return f"R-ratio({pct(self.level_beta)},{pct(self.level_gamma)})"
        name = "STARR" if self.kind is RatioKind.STARR else "CVaR"
        return f"{name}({pct(self.level_gamma)})"

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            level_gamma=d.get("level_gamma", 0.95),
            level_beta=d.get("level_beta"),
            clip_reward=bool(d.get("clip_reward", False)),
        )

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "level_gamma": self.level_gamma,
            "level_beta": self.level_beta,
            "clip_reward": self.clip_reward,
        }


def _upper_quantile(xs_sorted, gamma):
    """Smallest sample point whose empirical CDF exceeds ``gamma``."""
    n = xs_sorted.size
    # count of points <= xs_sorted[k] for each k, ties resolved to the last copy
    counts = np.searchsorted(xs_sorted, xs_sorted, side="right")
    above = np.nonzero(counts / n > gamma)[0]
    if above.size == 0:
        return math.inf
    return float(xs_sorted[above[0]])


def var_empirical(sample, gamma):
    """Value-at-Risk of the empirical distribution at tail probability ``gamma``.

    Positive values are losses. At ``gamma = 1`` every ``m`` qualifies and
    the result is ``-inf``.
    """
    x = check_series(sample, "sample")
    gamma = check_probability(gamma, "gamma")
    return -_upper_quantile(np.sort(x), gamma)


def avar_empirical(sample, gamma):
    """Average Value-at-Risk: ``gamma**-1 * integral_0^gamma VaR_u du``.

    On an empirical distribution ``VaR_u = -x_(j)`` for ``u`` in
    ``[(j-1)/n, j/n)``, so the integral is the mean of the ``floor(n*gamma)``
    worst outcomes plus a fractional share of the next one.
    """
    x = check_series(sample, "sample")
    gamma = check_probability(gamma, "gamma")
    xs = np.sort(x)
    n = xs.size
    whole = min(int(math.floor(n * gamma)), n)
    # guard n*gamma landing a hair below an integer
    if whole < n and math.isclose(n * gamma, whole + 1, rel_tol=0.0, abs_tol=1e-12):
        whole += 1
    frac = gamma - whole / n
    tail = xs[:whole].sum() / n
    if whole < n and frac > 0:
        tail += frac * xs[whole]
    return float(-tail / gamma)


def _cumulative_return(x):
    return float(np.prod(1.0 + x) - 1.0)


def _safe_ratio(num, den, clip):
    if clip:
        num = max(num, 0.0)
    if den <= 0:
        return RISKLESS if num > 0 else 0.0
    return num / den


def ratio(sample, spec):
    """Reward-risk score of one return series under ``spec``.

    Non-positive risk denominators map to ``+inf`` (risk-free dominance) so a
    ranking still totally orders assets.
    """
    x = check_series(sample, "sample", min_length=2)
    if np.ptp(x) == 0 and spec.kind is not RatioKind.CUMULATIVE:
        raise DataError("degenerate one-point sample")
    kind = spec.kind
    if kind is RatioKind.CUMULATIVE:
        return _cumulative_return(x)
    if kind is RatioKind.SHARPE:
        sd = float(np.std(x, ddof=1))
        if sd == 0:
            raise DataError("zero variance: Sharpe ratio undefined")
        mean = float(np.mean(x))
        return (max(mean, 0.0) if spec.clip_reward else mean) / sd
    tail = 1.0 - spec.level_gamma
    if kind is RatioKind.STARR:
        return _safe_ratio(float(np.mean(x)), avar_empirical(x, tail), spec.clip_reward)
    if kind is RatioKind.RACHEV:
        upside = avar_empirical(-x, 1.0 - spec.level_beta)
        return _safe_ratio(upside, avar_empirical(x, tail), spec.clip_reward)
    if kind is RatioKind.CVAR:
        var = var_empirical(x, tail)
        tail_mean = float(np.mean(x[x <= -var]))
        return _safe_ratio(tail_mean, var, spec.clip_reward)
    raise ValueError(f"unknown ratio kind {kind!r}")


def rolling_ratio(series, spec, window, dates=None):
    """Trailing-window scores; element ``j`` uses observations ``j .. j+window-1``.

    Returns ``(dates, scores)`` where ``dates`` are the window end dates (or
    integer end positions when ``dates`` is omitted).
    """
    x = check_series(series, "series")
    window = check_positive_int(window, "window")
    if window > x.size:
        raise DataError(f"window {window} exceeds series length {x.size}")
    n_out = x.size - window + 1
    scores = np.empty(n_out)
    for j in range(n_out):
        scores[j] = ratio(x[j : j + window], spec)
    ends = np.arange(window - 1, x.size) if dates is None else np.asarray(dates)[window - 1 :]
    return ends, scores


def write_scores_csv(path, dates, scores, spec):
    """Emit ``date, ratio_kind, level(s), value`` rows; ``+inf`` becomes ``inf``."""
    levels = "" if spec.level_gamma is None or spec.kind in (RatioKind.SHARPE, RatioKind.CUMULATIVE) else (
        f"{spec.level_beta};{spec.level_gamma}" if spec.kind is RatioKind.RACHEV else f"{spec.level_gamma}"
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date", "ratio_kind", "levels", "value"))
        for d, v in zip(dates, scores):
            d = str(np.datetime64(d, "D")) if isinstance(d, np.datetime64) else str(d)
            writer.writerow((d, spec.kind.value, levels, "inf" if v == math.inf else repr(float(v))))


@dataclass
class AxiomReport:
    spec: RatioSpec
    trials: int
    passes: dict
    failures: dict

    def passed(self, axiom):
        return self.failures[axiom] == 0

    def summary(self):
        return {a: (self.passes[a], self.failures[a]) for a in self.passes}


AXIOMS = ("monotonicity", "quasi_concavity", "scale_invariance", "distribution_based")


def _geq(a, b, slack):
    """``a >= b`` up to a relative slack, treating +inf consistently."""
    if b == math.inf:
        return a == math.inf
    if a == math.inf:
        return True
    return a >= b - slack * max(1.0, abs(b))


def _eq(a, b, slack):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= slack * max(1.0, abs(a), abs(b))


def axiom_suite(spec, trials=1000, seed=0, n_obs=250, slack=1e-10):
    """Randomized checks of the four reward-risk ratio axioms.

    Each trial draws paired heavy-tailed samples ``X`` and ``Y`` on a shared
    scenario index and checks

    * monotonicity: ``Y = X - |noise|`` is dominated, so ``a(X) >= a(Y)``;
    * quasi-concavity: ``a(l X + (1-l) Y) >= min(a(X), a(Y))``;
    * scale invariance: ``a(c X) == a(X)`` for ``c > 0``;
    * distribution-based: a permutation of ``X`` scores the same.
    """
    trials = check_positive_int(trials, "trials")
    rng = as_rng(seed)
    passes = dict.fromkeys(AXIOMS, 0)
    failures = dict.fromkeys(AXIOMS, 0)

    def record(axiom, ok):
        if ok:
            passes[axiom] += 1
        else:
            failures[axiom] += 1

    for _ in range(trials):
        scale = rng.uniform(0.005, 0.05)
        dof = rng.uniform(2.5, 8.0)
        x = rng.uniform(-0.6, 1.0) * scale + scale * rng.standard_t(dof, n_obs)
        y = rng.uniform(-0.6, 1.0) * scale + scale * rng.standard_t(dof, n_obs)
        ax, ay = ratio(x, spec), ratio(y, spec)

        dominated = x - np.abs(rng.normal(0.0, scale, n_obs)) * rng.integers(0, 2, n_obs)
        if np.ptp(dominated) > 0:
            record("monotonicity", _geq(ax, ratio(dominated, spec), slack))

        lam = rng.uniform(0.0, 1.0)
        mix = lam * x + (1.0 - lam) * y
        if np.ptp(mix) > 0:
            record("quasi_concavity", _geq(ratio(mix, spec), min(ax, ay), slack))

        c = float(np.exp(rng.uniform(-3.0, 3.0)))
        record("scale_invariance", _eq(ratio(c * x, spec), ax, slack))

        record("distribution_based", _eq(ratio(rng.permutation(x), spec), ax, slack))

    return AxiomReport(spec=spec, trials=trials, passes=passes, failures=failures)
