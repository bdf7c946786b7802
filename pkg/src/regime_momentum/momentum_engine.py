"""Reward-risk momentum backtests: rank on a trailing window, hold the extreme legs.

Timeline: the first decision uses periods ``[0, formation)`` and holds over
``[formation, formation + holding)``; each later decision ranks the
``formation`` periods immediately before it. Wealth paths start at 1 on the
date that closes the first formation window.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ._validation import DataError, check_positive_int, check_probability
from .data_model import ReturnPanel, summary_stats
from .risk_metrics import RISKLESS, RatioSpec, ratio

BEST_MARKER = "†"


@dataclass(frozen=True)
class RebalanceSchedule:
    """Formation and holding lengths in trading periods (10 periods = two weeks)."""

    formation_days: int = 10
    holding_days: int = 10

    def __post_init__(self):
        check_positive_int(self.formation_days, "formation_days")
        check_positive_int(self.holding_days, "holding_days")

    @property
    def label(self):
        return f"{self.formation_days}F/{self.holding_days}H"


DEFAULT_SCHEDULES = (RebalanceSchedule(10, 10), RebalanceSchedule(15, 10), RebalanceSchedule(20, 10))


@dataclass(frozen=True)
class SelectionRule:
    """Equal-weighted top and bottom ``quantile`` of the ranking."""

    spec: RatioSpec = field(default_factory=RatioSpec)
    quantile: float = 0.25

    def __post_init__(self):
        check_probability(self.quantile, "quantile")
        if self.quantile > 0.5:
            raise ValueError(f"quantile must be at most 0.5, got {self.quantile}")

    def leg_size(self, n_assets):
        m = math.ceil(self.quantile * n_assets - 1e-12)
        if n_assets < 2 or m < 1 or 2 * m > n_assets:
            raise DataError(
                f"{n_assets} assets cannot form disjoint legs at quantile {self.quantile}"
            )
        return m


def _window_score(x, spec):
    # a constant window has no dispersion: riskless gain, riskless loss or nothing
    if np.ptp(x) == 0:
        c = float(x[0])
        return RISKLESS if c > 0 else (-RISKLESS if c < 0 else 0.0)
    return ratio(x, spec)


def rank_assets(panel, spec):
    """Asset indices ordered by descending score; ties go to the smaller asset id."""
    if panel.n_periods < 2:
        raise DataError("ranking window needs at least two periods")
    scores = np.array([_window_score(row, spec) for row in panel.returns])
    ids = panel.asset_ids
    order = sorted(range(panel.n_assets), key=lambda i: (-scores[i], ids[i]))
    return np.array(order, dtype=np.int64), scores


def form_portfolios(ranking, rule, n_assets=None):
    """Equal weights ``1/m`` on the first and last ``m`` ranked assets."""
    ranking = np.asarray(ranking, dtype=np.int64)
    if ranking.size == 0:
        raise DataError("empty ranking")
    n = ranking.size if n_assets is None else n_assets
    m = rule.leg_size(n)
    winners = np.zeros(n)
    losers = np.zeros(n)
    winners[ranking[:m]] = 1.0 / m
    losers[ranking[-m:]] = 1.0 / m
    return winners, losers


def capped_trade(current, target, cap):
    """Move ``current`` toward ``target`` with ``sum |change| <= cap``; returns ``(new, turnover)``."""
    delta = target - current
    full = float(np.abs(delta).sum())
    if full <= cap or full == 0:
        return target.copy(), full
    scale = cap / full
    new = current + scale * delta
    turnover = float(np.abs(new - current).sum())
    shrink = 4.0 * np.finfo(float).eps
    while turnover > cap:  # rounding can overshoot by a few ulps
        scale *= 1.0 - shrink
        shrink = min(2.0 * shrink, 0.5)
        new = current + scale * delta
        turnover = float(np.abs(new - current).sum())
    return new, turnover


@dataclass
class BacktestResult:
    """Wealth paths (length ``n_holding_periods + 1``, starting at 1) and the trade log."""

    dates: np.ndarray
    wealth_winners: np.ndarray
    wealth_losers: np.ndarray
    wealth_spread: np.ndarray
    wealth_benchmark: np.ndarray
    trade_log: list
    holding_returns: dict
    schedule: RebalanceSchedule
    rule: SelectionRule

    LEGS = ("winners", "losers", "spread", "benchmark")

    def wealth(self, leg):
        return getattr(self, f"wealth_{leg}")

    @property
    def final_wealth(self):
        """Terminal value per leg (unit start)."""
        return {leg: float(self.wealth(leg)[-1]) for leg in self.LEGS}

    @property
    def final_profit(self):
        """Cumulative profit per leg: terminal value minus the unit of capital."""
        return {leg: v - 1.0 for leg, v in self.final_wealth.items()}

    def wealth_frame(self):
        return pd.DataFrame({leg: self.wealth(leg) for leg in self.LEGS}, index=pd.Index(self.dates, name="date"))

    def write_csv(self, path):
        frame = self.wealth_frame()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("date",) + self.LEGS)
            for date, row in zip(frame.index, frame.to_numpy()):
                writer.writerow((str(date)[:10],) + tuple(repr(float(v)) for v in row))

    def to_json(self):
        return json.dumps(
            {
                "schedule": self.schedule.label,
                "rule": {"spec": self.rule.spec.to_dict(), "quantile": self.rule.quantile},
                "final_wealth": self.final_wealth,
                "final_profit": self.final_profit,
                "trade_log": self.trade_log,
            },
            indent=2,
            sort_keys=True,
        )


def run_backtest(panel, schedule, rule, turnover_cap=0.04, cost_bps=0.0):
    """Formation/holding backtest with a per-rebalance turnover cap.

    Each leg holds constant weights within a holding window. At every
    rebalance after the initial funding trade, the move toward the new
    target is scaled so that ``sum |w_new - w_old| <= turnover_cap``, and
    ``cost_bps * 1e-4 * turnover`` is charged against the leg's wealth.
    Winners, losers and the equal-weight benchmark compound
    multiplicatively; the spread leg accrues ``R_winners - R_losers``
    additively on one unit of capital.
    """
    if not isinstance(panel, ReturnPanel):
        raise TypeError("panel must be a ReturnPanel")
    f, hold = schedule.formation_days, schedule.holding_days
    T, N = panel.n_periods, panel.n_assets
    if T < f + hold:
        raise DataError(f"need at least {f + hold} periods, have {T}")
    if f < 2:
        raise DataError("formation window must cover at least two periods")
    rule.leg_size(N)
    if turnover_cap < 0 or cost_bps < 0:
        raise ValueError("turnover_cap and cost_bps must be non-negative")
    cost = cost_bps * 1e-4
    R = panel.returns

    n_steps = T - f
    ww = np.ones(n_steps + 1)
    wl = np.ones(n_steps + 1)
    ws = np.ones(n_steps + 1)
    wb = np.ones(n_steps + 1)
    bench = np.full(N, 1.0 / N)
    cur_w = cur_l = None
    log = []
    hr = {leg: [] for leg in BacktestResult.LEGS}

    for start in range(f, T, hold):
        ranking, scores = rank_assets(panel.window(start - f, start), rule.spec)
        tgt_w, tgt_l = form_portfolios(ranking, rule, N)
        if cur_w is None:
            cur_w, turn_w = tgt_w, 1.0
            cur_l, turn_l = tgt_l, 1.0
            charged_w = charged_l = 0.0
        else:
            cur_w, turn_w = capped_trade(cur_w, tgt_w, turnover_cap)
            cur_l, turn_l = capped_trade(cur_l, tgt_l, turnover_cap)
            charged_w, charged_l = turn_w, turn_l
        i0 = start - f
        ww[i0] *= 1.0 - cost * charged_w
        wl[i0] *= 1.0 - cost * charged_l
        ws[i0] -= cost * (charged_w + charged_l)
        stop = min(start + hold, T)
        rw = cur_w @ R[:, start:stop]
        rl = cur_l @ R[:, start:stop]
        rb = bench @ R[:, start:stop]
        k = stop - start
        ww[i0 + 1 : i0 + k + 1] = ww[i0] * np.cumprod(1.0 + rw)
        wl[i0 + 1 : i0 + k + 1] = wl[i0] * np.cumprod(1.0 + rl)
        wb[i0 + 1 : i0 + k + 1] = wb[i0] * np.cumprod(1.0 + rb)
        ws[i0 + 1 : i0 + k + 1] = ws[i0] + np.cumsum(rw - rl)
        hr["winners"].append(float(np.prod(1.0 + rw) - 1.0))
        hr["losers"].append(float(np.prod(1.0 + rl) - 1.0))
        hr["benchmark"].append(float(np.prod(1.0 + rb) - 1.0))
        hr["spread"].append(float(np.sum(rw - rl)))
        log.append({
            "date": str(panel.dates[start - 1])[:10],
            "period": int(start),
            "winners": [panel.asset_ids[i] for i in np.nonzero(cur_w > 0)[0]],
            "losers": [panel.asset_ids[i] for i in np.nonzero(cur_l > 0)[0]],
            "target_winners": [panel.asset_ids[i] for i in np.nonzero(tgt_w > 0)[0]],
            "target_losers": [panel.asset_ids[i] for i in np.nonzero(tgt_l > 0)[0]],
            "turnover_winners": turn_w,
            "turnover_losers": turn_l,
            "initial": len(log) == 0,
        })

    return BacktestResult(
        dates=panel.dates[f - 1 :],
        wealth_winners=ww,
        wealth_losers=wl,
        wealth_spread=ws,
        wealth_benchmark=wb,
        trade_log=log,
        holding_returns={k: np.array(v) for k, v in hr.items()},
        schedule=schedule,
        rule=rule,
    )


def _stats_row(x):
    try:
        s = summary_stats(x)
        return s.as_row()
    except Exception:  # too few holding periods or zero variance
        return (float(np.mean(x)) if len(x) else math.nan, math.nan, math.nan, math.nan)


def scheme_comparison(panel, schedules=DEFAULT_SCHEDULES, rules=(SelectionRule(),), turnover_cap=0.04, cost_bps=0.0):
    """One row per (rule, schedule, leg): holding-period moments and terminal wealth.

    ``best`` carries the dagger marker on the schedule with the highest
    spread final wealth for each rule (ties go to the first schedule).
    """
    rows = []
    for rule in rules:
        results = [(s, run_backtest(panel, s, rule, turnover_cap, cost_bps)) for s in schedules]
        spread_final = [res.final_wealth["spread"] for _, res in results]
        best = int(np.argmax(spread_final))
        for j, (sched, res) in enumerate(results):
            for leg in BacktestResult.LEGS:
                mean, sd, skew, kurt = _stats_row(res.holding_returns[leg])
                rows.append({
                    "rule": rule.spec.label,
                    "scheme": sched.label,
                    "leg": leg,
                    "mean": mean,
                    "std_dev": sd,
                    "skewness": skew,
                    "kurtosis": kurt,
                    "final_wealth": res.final_wealth[leg],
                    "final_profit": res.final_profit[leg],
                    "best": BEST_MARKER if (j == best and leg == "spread") else "",
                })
    return pd.DataFrame(rows)
