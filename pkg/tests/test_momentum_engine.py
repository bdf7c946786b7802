import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_panel
from regime_momentum._validation import DataError
from regime_momentum.momentum_engine import (
    BEST_MARKER,
    RebalanceSchedule,
    SelectionRule,
    capped_trade,
    form_portfolios,
    rank_assets,
    run_backtest,
    scheme_comparison,
)
from regime_momentum.risk_metrics import RatioKind, RatioSpec

SHARPE = RatioSpec(RatioKind.SHARPE)


def test_dominant_asset_ranks_first(rng):
    x = rng.normal(0, 0.01, 40)
    panel = make_panel(np.vstack([x - 0.002, x]))
    order, _ = rank_assets(panel, RatioSpec(RatioKind.STARR, 0.95))
    assert list(order) == [1, 0]


def test_identical_assets_keep_id_order(rng):
    x = rng.normal(0, 0.01, 20)
    panel = make_panel(np.vstack([x, x, x]), ids=["C", "A", "B"])
    order, _ = rank_assets(panel, SHARPE)
    assert [panel.asset_ids[i] for i in order] == ["A", "B", "C"]


def test_hand_sharpe_order():
    R = np.array([
        [0.01, 0.03, 0.02, 0.02],   # mean .02, sd .008165 -> 2.449
        [0.00, 0.04, 0.00, 0.04],   # mean .02, sd .023094 -> 0.866
        [-0.01, 0.01, 0.00, 0.00],  # mean 0 -> 0
    ])
    order, scores = rank_assets(make_panel(R), SHARPE)
    assert list(order) == [0, 1, 2]
    np.testing.assert_allclose(scores, [0.02 / np.std(R[0], ddof=1), 0.02 / np.std(R[1], ddof=1), 0.0], atol=1e-12)


def test_rank_rejects_short_window():
    with pytest.raises(DataError):
        rank_assets(make_panel([[0.01], [0.02]]), SHARPE)


def test_leg_sizes():
    w, l = form_portfolios(np.arange(30), SelectionRule(quantile=0.25))
    assert np.count_nonzero(w) == 8 and np.allclose(w[w > 0], 0.125)
    assert w.sum() == pytest.approx(1.0) and l.sum() == pytest.approx(1.0)
    w, l = form_portfolios(np.array([1, 0]), SelectionRule(quantile=0.5))
    assert list(w) == [0, 1] and list(l) == [1, 0]
    with pytest.raises(DataError):
        form_portfolios(np.array([0]), SelectionRule(quantile=0.5))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.floats(0, 1), st.integers(0, 2**31))
def test_capped_trade_respects_cap(n, cap, seed):
    rng = np.random.default_rng(seed)
    cur = rng.dirichlet(np.ones(n))
    tgt = rng.dirichlet(np.ones(n))
    new, turnover = capped_trade(cur, tgt, cap)
    assert turnover <= cap
    assert turnover == pytest.approx(min(cap, np.abs(tgt - cur).sum()), abs=1e-12)
    assert new.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(new >= -1e-15)


def test_zero_panel_flat_wealth():
    panel = make_panel(np.zeros((6, 60)))
    res = run_backtest(panel, RebalanceSchedule(10, 10), SelectionRule(quantile=0.25))
    for leg in res.LEGS:
        np.testing.assert_array_equal(res.wealth(leg), 1.0)
    assert all(e["turnover_winners"] == 0 and e["turnover_losers"] == 0 for e in res.trade_log[1:])


def test_up_down_spread_two_percent():
    T = 20
    panel = make_panel(np.vstack([np.full(T, 0.01), np.full(T, -0.01)]))
    res = run_backtest(panel, RebalanceSchedule(2, 2), SelectionRule(quantile=0.5), turnover_cap=math.inf)
    np.testing.assert_allclose(np.diff(res.wealth_spread), 0.02, atol=1e-15)
    assert res.final_profit["spread"] == pytest.approx(0.02 * (T - 2))


def test_identical_assets_spread_flat(rng):
    x = rng.normal(0, 0.01, 50)
    panel = make_panel(np.vstack([x, x, x, x]))
    res = run_backtest(panel, RebalanceSchedule(5, 5), SelectionRule(quantile=0.5))
    np.testing.assert_allclose(res.wealth_spread, 1.0, atol=1e-15)


def _direct_leg_wealth(panel, res, leg):
    wealth = [1.0]
    f = res.schedule.formation_days
    for entry in res.trade_log:
        idx = [panel.asset_ids.index(a) for a in entry[leg]]
        start = entry["period"]
        stop = min(start + res.schedule.holding_days, panel.n_periods)
        for t in range(start, stop):
            wealth.append(wealth[-1] * (1 + np.mean(panel.returns[idx, t])))
    assert len(wealth) == panel.n_periods - f + 1
    return np.array(wealth)


def test_uncapped_matches_direct_compounding(rng):
    panel = make_panel(rng.normal(0.0005, 0.02, (10, 97)))
    res = run_backtest(panel, RebalanceSchedule(7, 5), SelectionRule(SHARPE, 0.2), turnover_cap=math.inf)
    for leg in ("winners", "losers"):
        np.testing.assert_allclose(res.wealth(leg), _direct_leg_wealth(panel, res, leg), rtol=1e-12)
    bench = np.concatenate([[1.0], np.cumprod(1 + panel.returns[:, 7:].mean(axis=0))])
    np.testing.assert_allclose(res.wealth_benchmark, bench, rtol=1e-12)


def test_turnover_cap_and_costs(rng):
    panel = make_panel(rng.normal(0, 0.02, (12, 120)))
    res = run_backtest(panel, RebalanceSchedule(10, 5), SelectionRule(), turnover_cap=0.04, cost_bps=10)
    assert res.trade_log[0]["initial"]
    for e in res.trade_log[1:]:
        assert e["turnover_winners"] <= 0.04 and e["turnover_losers"] <= 0.04
    free = run_backtest(panel, RebalanceSchedule(10, 5), SelectionRule(), turnover_cap=0.04, cost_bps=0)
    assert res.final_wealth["winners"] <= free.final_wealth["winners"]


def test_scale_invariant_membership(rng):
    R = rng.normal(0.0, 0.01, (8, 80))
    spec = RatioSpec(RatioKind.STARR, 0.95)
    a = run_backtest(make_panel(R), RebalanceSchedule(10, 10), SelectionRule(spec), 0.04)
    b = run_backtest(make_panel(3.0 * R), RebalanceSchedule(10, 10), SelectionRule(spec), 0.04)
    for ea, eb in zip(a.trade_log, b.trade_log):
        assert ea["target_winners"] == eb["target_winners"] and ea["turnover_losers"] == pytest.approx(eb["turnover_losers"])


def test_truncation_leaves_decisions_unchanged(rng):
    panel = make_panel(rng.normal(0, 0.02, (9, 100)))
    full = run_backtest(panel, RebalanceSchedule(10, 10), SelectionRule(), 0.04)
    cut = make_panel(panel.returns[:, :63], ids=list(panel.asset_ids))
    part = run_backtest(cut, RebalanceSchedule(10, 10), SelectionRule(), 0.04)
    assert part.trade_log == full.trade_log[: len(part.trade_log)]
    np.testing.assert_array_equal(part.wealth_spread, full.wealth_spread[: part.wealth_spread.size])


def test_backtest_errors(rng):
    panel = make_panel(rng.normal(0, 0.01, (4, 15)))
    with pytest.raises(DataError):
        run_backtest(panel, RebalanceSchedule(10, 10), SelectionRule())
    with pytest.raises(DataError):
        run_backtest(make_panel(rng.normal(0, 0.01, (1, 40))), RebalanceSchedule(5, 5), SelectionRule())
    with pytest.raises(ValueError):
        RebalanceSchedule(0, 5)


def test_outputs(tmp_path, rng):
    panel = make_panel(rng.normal(0, 0.01, (4, 40)))
    res = run_backtest(panel, RebalanceSchedule(10, 10), SelectionRule(quantile=0.5))
    res.write_csv(tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "date,winners,losers,spread,benchmark" and len(lines) == 32
    payload = json.loads(res.to_json())
    assert payload["schedule"] == "10F/10H" and len(payload["trade_log"]) == 3


def test_scheme_comparison_single_cell_consistency(rng):
    panel = make_panel(rng.normal(0, 0.01, (6, 60)))
    sched, rule = RebalanceSchedule(10, 10), SelectionRule(quantile=0.5)
    table = scheme_comparison(panel, [sched], [rule])
    res = run_backtest(panel, sched, rule)
    assert len(table) == 4
    for _, row in table.iterrows():
        assert row["final_wealth"] == res.final_wealth[row["leg"]]
    assert table.loc[table["leg"] == "spread", "best"].item() == BEST_MARKER


def test_scheme_comparison_dagger_is_argmax():
    # asset 0 trends up for 30 periods then reverses; a longer formation
    # window keeps the stale winner longer, so the 2/2 scheme should win
    up = np.r_[np.full(30, 0.01), np.full(30, -0.01)]
    panel = make_panel(np.vstack([up, -up]))
    rule = SelectionRule(SHARPE, 0.5)
    table = scheme_comparison(panel, [RebalanceSchedule(2, 2), RebalanceSchedule(3, 2)], [rule], turnover_cap=math.inf)
    spread = table[table["leg"] == "spread"].reset_index(drop=True)
    assert spread.loc[spread["final_wealth"].idxmax(), "best"] == BEST_MARKER
    assert (spread["best"] == BEST_MARKER).sum() == 1
    assert spread.loc[0, "final_wealth"] > spread.loc[1, "final_wealth"]
