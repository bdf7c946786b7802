import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from regime_momentum._validation import DataError
from regime_momentum.data_model import (
    PricePanel,
    ReturnPanel,
    compound_prices,
    load_price_csv,
    load_regime_labels,
    summary_stats,
    to_arithmetic_returns,
    write_summary_csv,
)


def _write(tmp_path, text, name="prices.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_well_formed(tmp_path):
    p = _write(tmp_path, "date,A,B\n2021-01-04,10,20\n2021-01-05,11,21\n2021-01-06,12,22\n")
    panel = load_price_csv(p)
    assert panel.n_dates == 3 and panel.n_assets == 2
    assert panel.asset_ids == ("A", "B")
    np.testing.assert_array_equal(panel.prices[1], [20, 21, 22])


def test_load_sorts_dates(tmp_path):
    p = _write(tmp_path, "date,A\n2021-01-06,12\n2021-01-04,10\n2021-01-05,11\n")
    panel = load_price_csv(p)
    np.testing.assert_array_equal(panel.prices[0], [10, 11, 12])


def test_duplicate_date_rejected(tmp_path):
    p = _write(tmp_path, "date,A\n2021-01-04,10\n2021-01-04,11\n")
    with pytest.raises(DataError, match="duplicate date"):
        load_price_csv(p)


def test_missing_cell_drop_row(tmp_path):
    p = _write(tmp_path, "date,A,B\n2021-01-04,10,20\n2021-01-05,,21\n2021-01-06,12,22\n")
    assert load_price_csv(p, missing="drop-row").n_dates == 2


def test_missing_cell_forward_fill(tmp_path):
    p = _write(tmp_path, "date,A,B\n2021-01-04,10,20\n2021-01-05,,21\n2021-01-06,12,22\n")
    panel = load_price_csv(p, missing="forward-fill")
    assert panel.n_dates == 3
    assert panel.prices[0, 1] == 10


def test_malformed_date_and_nonpositive_price(tmp_path):
    with pytest.raises(DataError, match="malformed date"):
        load_price_csv(_write(tmp_path, "date,A\nnot-a-date,10\n2021-01-05,11\n"))
    with pytest.raises(DataError, match="non-positive"):
        load_price_csv(_write(tmp_path, "date,A\n2021-01-04,10\n2021-01-05,0\n", "b.csv"))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_price_csv(tmp_path / "nope.csv")


def _prices(rows):
    rows = np.atleast_2d(rows)
    dates = np.arange(np.datetime64("2021-01-04"), np.datetime64("2021-01-04") + rows.shape[1])
    return PricePanel(dates, rows, tuple(f"A{i}" for i in range(rows.shape[0])))


@pytest.mark.parametrize(
    "prices, expected",
    [([100, 110], [0.10]), ([50, 50, 50], [0.0, 0.0]), ([100, 80, 100], [-0.20, 0.25])],
)
def test_arithmetic_returns_examples(prices, expected):
    r = to_arithmetic_returns(_prices(np.array(prices, dtype=float)))
    np.testing.assert_allclose(r.returns[0], expected, rtol=0, atol=1e-15)


def test_returns_need_two_dates():
    with pytest.raises(DataError):
        to_arithmetic_returns(_prices(np.array([[100.0]])))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 30), elements=st.floats(-0.5, 0.5)))
def test_compounding_round_trip(returns):
    p0 = np.array([100.0, 1.0, 55.5])
    prices = compound_prices(returns, p0)
    back = to_arithmetic_returns(_prices(prices)).returns
    rebuilt = compound_prices(back, p0)
    np.testing.assert_allclose(rebuilt, prices, rtol=1e-12)


def test_return_panel_invariants():
    dates = np.array(["2021-01-04", "2021-01-05"], dtype="datetime64[D]")
    with pytest.raises(DataError):
        ReturnPanel(dates, [[0.1, -1.0]], ("A",))
    with pytest.raises(DataError):
        ReturnPanel(dates, [[0.1, np.nan]], ("A",))
    with pytest.raises(DataError):
        ReturnPanel(dates[::-1], [[0.1, 0.2]], ("A",))


def test_summary_stats_examples(rng):
    assert summary_stats([-1, 0, 1, 0]).skewness == pytest.approx(0.0, abs=1e-15)
    assert summary_stats([-1, 1, -1, 1]).kurtosis == pytest.approx(1.0, abs=1e-15)
    assert summary_stats(rng.standard_normal(100_000)).kurtosis == pytest.approx(3.0, abs=0.1)


def test_summary_stats_sample_std():
    s = summary_stats([1.0, 2.0, 3.0, 4.0])
    assert s.std_dev == pytest.approx(np.std([1, 2, 3, 4], ddof=1))


def test_summary_stats_errors():
    with pytest.raises(DataError):
        summary_stats([1.0, 2.0, 3.0])
    with pytest.raises(DataError, match="zero variance"):
        summary_stats([2.0] * 10)


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, st.integers(4, 60), elements=st.floats(-1, 1)).filter(lambda a: np.ptp(a) > 1e-3),
    st.floats(-5, 5),
)
def test_summary_stats_shift_and_permutation(x, c):
    base = summary_stats(x)
    shifted = summary_stats(x + c)
    assert shifted.mean == pytest.approx(base.mean + c, abs=1e-12)
    assert shifted.std_dev == pytest.approx(base.std_dev, rel=1e-8, abs=1e-12)
    assert shifted.skewness == pytest.approx(base.skewness, rel=1e-6, abs=1e-6)
    assert shifted.kurtosis == pytest.approx(base.kurtosis, rel=1e-6)
    perm = summary_stats(x[::-1])
    assert perm.as_row() == pytest.approx(base.as_row(), rel=1e-12, abs=1e-14)
    assert base.std_dev >= 0 and base.kurtosis >= 1 - 1e-12


def test_write_summary_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_summary_csv(path, {"A": summary_stats([-1, 0, 1, 0])})
    header = path.read_text().splitlines()[0]
    assert header == "series,Mean,Std. Dev.,Skewness,Kurtosis"


def test_frame_round_trip(panel_factory, rng):
    panel = panel_factory(rng.normal(0, 0.01, (3, 20)))
    back = ReturnPanel.from_frame(panel.to_frame())
    np.testing.assert_array_equal(back.returns, panel.returns)
    assert back.asset_ids == panel.asset_ids


def test_regime_labels(tmp_path):
    p = _write(tmp_path, "date,state\n2021-01-04,0\n2021-01-05,1\n", "r.csv")
    dates, states = load_regime_labels(p)
    assert list(states) == [0, 1]
    bad = _write(tmp_path, "date,state\n2021-01-04,2\n", "bad.csv")
    with pytest.raises(DataError):
        load_regime_labels(bad)
