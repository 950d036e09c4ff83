"""Negative log-returns, cross-sectional maxima and intra-day maxima."""
import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from acaf import PricePanel, TickSeries, cross_sectional_maxima, intraday_maxima, neg_log_returns

DATES = ("2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07")


def ticks(times, prices):
    return TickSeries(np.array(times, dtype="datetime64[ns]"), np.array(prices, dtype=float))


def random_day(rng, day="2021-03-04", n=400):
    start = np.datetime64(f"{day}T09:30:00", "s")
    secs = np.sort(rng.integers(0, 6.5 * 3600, n))
    times = (start + secs.astype("timedelta64[s]")).astype("datetime64[ns]")
    prices = 50 * np.exp(np.cumsum(rng.normal(0, 1e-3, n)))
    return times, prices


def pandas_oracle(times, prices, interval):
    s = pd.Series(prices, index=pd.DatetimeIndex(times))
    out = {}
    for day, grp in s.groupby(s.index.normalize()):
        grid = grp.resample(f"{interval}min").last().ffill()
        if len(grid) < 2:
            continue
        out[str(day.date())] = float((-np.log(grid / grid.shift(1))).iloc[1:].max())
    return out


def test_neg_log_returns_examples():
    assert neg_log_returns([100, 90])[0] == pytest.approx(np.log(10 / 9), rel=1e-15)
    assert neg_log_returns([100, 90])[0] == pytest.approx(0.105361, abs=5e-7)
    assert neg_log_returns([100, 100])[0] == 0.0


def test_neg_log_returns_errors():
    with pytest.raises(ValueError, match="index 2"):
        neg_log_returns([1.0, 2.0, 0.0, 3.0])
    with pytest.raises(ValueError):
        neg_log_returns([1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1e6), min_size=2, max_size=200))
def test_telescoping_round_trip(prices):
    r = neg_log_returns(prices)
    assert np.exp(-r.sum()) * prices[0] == pytest.approx(prices[-1], rel=1e-12)


def test_panel_two_tickers():
    prices = np.array([[100, 100], [99, 97.04455335], [100, 100], [100, 100]])
    panel = PricePanel(DATES, ("A", "B"), prices)
    q, rep = cross_sectional_maxima(panel)
    r = -np.log(prices[1] / prices[0])
    assert q.values[0] == max(r)
    assert q.values[0] == pytest.approx(0.03, abs=1e-8)
    assert q.labels == DATES[1:]
    assert rep.rows_in == 4 and rep.rows_out == 3
    assert rep.dropped == [(DATES[0], "no_previous_price")]


def test_panel_missing_ticker():
    prices = np.array([[100, 100], [95, np.nan], [96, 101], [np.nan, np.nan]])
    q, rep = cross_sectional_maxima(PricePanel(DATES, ("A", "B"), prices))
    assert q.values[0] == pytest.approx(-np.log(0.95), rel=1e-15)
    # B has no price on the previous date, so only A contributes on date 3.
    assert q.values[1] == pytest.approx(-np.log(96 / 95), rel=1e-15)
    assert list(rep.contributors) == [1, 1]
    assert rep.reasons() == {"no_previous_price": 1, "no_contributor": 1}
    assert rep.rows_in == rep.rows_out + len(rep.dropped)


def test_panel_brute_force_oracle(rng):
    t, k = 300, 25
    prices = 20 * np.exp(np.cumsum(rng.normal(0, 0.02, (t, k)), axis=0))
    prices[rng.random((t, k)) < 0.1] = np.nan
    dates = tuple(str(d) for d in np.arange(np.datetime64("2010-01-01"), np.datetime64("2010-01-01") + t))
    q, rep = cross_sectional_maxima(PricePanel(dates, tuple(map(str, range(k))), prices))
    expect, labels = [], []
    for i in range(1, t):
        vals = [-np.log(prices[i, j] / prices[i - 1, j]) for j in range(k)
                if not (np.isnan(prices[i, j]) or np.isnan(prices[i - 1, j]))]
        if vals:
            expect.append(max(vals))
            labels.append(dates[i])
    assert np.array_equal(q.values, np.array(expect))
    assert q.labels == tuple(labels)
    assert rep.rows_in == rep.rows_out + len(rep.dropped)


def test_panel_validation():
    with pytest.raises(ValueError):
        PricePanel(DATES[:2], ("A",), np.array([[1.0], [-1.0]]))
    with pytest.raises(ValueError):
        PricePanel(("2020-01-03", "2020-01-02"), ("A",), np.array([[1.0], [2.0]]))
    with pytest.raises(ValueError):
        cross_sectional_maxima(PricePanel((), (), np.empty((0, 0))))


def test_panel_no_look_ahead(rng):
    prices = 10 * np.exp(np.cumsum(rng.normal(0, 0.02, (50, 4)), axis=0))
    dates = tuple(str(np.datetime64("2015-06-01") + i) for i in range(50))
    base, _ = cross_sectional_maxima(PricePanel(dates, ("a", "b", "c", "d"), prices))
    later = prices.copy()
    later[30:] *= rng.uniform(0.5, 1.5, later[30:].shape)
    moved, _ = cross_sectional_maxima(PricePanel(dates, ("a", "b", "c", "d"), later))
    assert np.array_equal(base.values[:29], moved.values[:29])


def test_intraday_hand_example():
    t = ["2021-01-04T09:30", "2021-01-04T09:35", "2021-01-04T09:40", "2021-01-04T09:45"]
    q, rep = intraday_maxima(ticks(t, [100, 99, 98.5, 99.2]), 5)
    expect = max(-np.log(0.99), -np.log(98.5 / 99), -np.log(99.2 / 98.5))
    assert q.values[0] == pytest.approx(expect, rel=1e-15)
    assert q.values[0] == pytest.approx(0.010050, abs=5e-7)
    assert q.labels == ("2021-01-04",)


def test_intraday_rising_day_nonpositive():
    t = [f"2021-01-04T10:{m:02d}" for m in range(0, 60, 5)]
    q, _ = intraday_maxima(ticks(t, np.linspace(10, 12, len(t))), 5)
    assert q.values[0] <= 0


def test_intraday_carry_forward_and_day_split():
    t = ["2021-01-04T09:30", "2021-01-04T09:42", "2021-01-05T09:30", "2021-01-05T09:31",
         "2021-01-06T09:30", "2021-01-06T09:36"]
    q, rep = intraday_maxima(ticks(t, [100, 98, 50, 51, 70, 69]), 5)
    # Day one: grid 09:30, 09:35 (carried 100), 09:40 -> 98; the overnight gap is never a return.
    assert q.values[0] == pytest.approx(-np.log(0.98), rel=1e-15)
    assert rep.dropped == [("2021-01-05", "fewer_than_two_slots")]
    assert rep.rows_in == 3 and rep.rows_out == 2
    assert q.labels == ("2021-01-04", "2021-01-06")


def test_intraday_matches_pandas(rng):
    times, prices = [], []
    for day in ("2021-03-01", "2021-03-02", "2021-03-03"):
        t, p = random_day(rng, day)
        times.append(t)
        prices.append(p)
    times, prices = np.concatenate(times), np.concatenate(prices)
    for interval in (1, 5, 15, 30):
        q, _ = intraday_maxima(TickSeries(times, prices), interval)
        ref = pandas_oracle(times, prices, interval)
        assert q.labels == tuple(ref)
        np.testing.assert_allclose(q.values, list(ref.values()), rtol=1e-14)


def test_intraday_errors():
    with pytest.raises(ValueError, match="row 2"):
        ticks(["2021-01-04T09:30", "2021-01-04T09:40", "2021-01-04T09:35"], [1, 2, 3])
    with pytest.raises(ValueError):
        intraday_maxima(ticks(["2021-01-04T09:30"], [1.0]), 2.5)
    with pytest.raises(ValueError):
        intraday_maxima(ticks(["2021-01-04T09:30"], [1.0]), 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(-20, 20), st.integers(0, 10**6))
def test_scale_equivariance_exact(power, seed):
    rng = np.random.default_rng(seed)
    c = 2.0**power
    prices = 30 * np.exp(np.cumsum(rng.normal(0, 0.03, (40, 3)), axis=0))
    dates = tuple(str(np.datetime64("2019-01-01") + i) for i in range(40))
    a, _ = cross_sectional_maxima(PricePanel(dates, ("x", "y", "z"), prices))
    b, _ = cross_sectional_maxima(PricePanel(dates, ("x", "y", "z"), c * prices))
    assert np.array_equal(a.values, b.values)
    t, p = random_day(rng, n=200)
    x, _ = intraday_maxima(TickSeries(t, p), 5)
    y, _ = intraday_maxima(TickSeries(t, c * p), 5)
    assert np.array_equal(x.values, y.values)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6), st.integers(0, 10**6))
def test_scale_equivariance_general_constant(c, seed):
    rng = np.random.default_rng(seed)
    prices = 30 * np.exp(np.cumsum(rng.normal(0, 0.03, (40, 3)), axis=0))
    dates = tuple(str(np.datetime64("2019-01-01") + i) for i in range(40))
    a, _ = cross_sectional_maxima(PricePanel(dates, ("x", "y", "z"), prices))
    b, _ = cross_sectional_maxima(PricePanel(dates, ("x", "y", "z"), c * prices))
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=1e-15)


def test_csv_readers(tmp_path):
    panel_csv = tmp_path / "panel.csv"
    panel_csv.write_text("date;A;B\n2020-01-02;100;100\n2020-01-03;99;NA\n2020-01-06;98;97\n")
    panel = PricePanel.from_csv(panel_csv, delimiter=";")
    assert panel.tickers == ("A", "B") and np.isnan(panel.prices[1, 1])
    q, rep = cross_sectional_maxima(panel)
    assert q.values[0] == pytest.approx(-np.log(0.99), rel=1e-15)
    tick_csv = tmp_path / "ticks.csv"
    tick_csv.write_text("timestamp,price\n2021-01-04T09:30:00Z,100\n2021-01-04T09:35:00Z,99\n")
    q, _ = intraday_maxima(TickSeries.from_csv(tick_csv), 5)
    assert q.values[0] == pytest.approx(-np.log(0.99), rel=1e-15)
    assert "rows_in=3" in rep.manifest_line()
