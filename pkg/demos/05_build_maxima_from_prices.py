"""From prices to a maxima series.

Builds daily cross-sectional maxima of negative log-returns from a synthetic
panel with gaps, and intra-day maxima on a 5-minute grid from synthetic
ticks. Every dropped period is reported with a reason.
"""
import numpy as np

from acaf import PricePanel, TickSeries, cross_sectional_maxima, intraday_maxima

rng = np.random.default_rng(4)
n_days, n_stocks = 250, 40
prices = 50 * np.exp(np.cumsum(rng.standard_t(4, (n_days, n_stocks)) * 0.01, axis=0))
prices[rng.random(prices.shape) < 0.05] = np.nan
dates = tuple(str(d) for d in np.busday_offset("2022-01-03", np.arange(n_days)))
series, report = cross_sectional_maxima(PricePanel(dates, tuple(f"S{i}" for i in range(n_stocks)), prices))
print("panel:", report.manifest_line())
print("first maxima:", np.round(series.values[:5], 4), series.labels[:2])

# Ticks for three sessions at random times.
times, ticks = [], []
for day in ("2022-03-01", "2022-03-02", "2022-03-03"):
    secs = np.sort(rng.integers(0, int(6.5 * 3600), 500))
    times.append(np.datetime64(f"{day}T09:30:00", "s") + secs.astype("timedelta64[s]"))
    ticks.append(30 * np.exp(np.cumsum(rng.normal(0, 5e-4, 500))))
daily, rep = intraday_maxima(TickSeries(np.concatenate(times), np.concatenate(ticks)), interval=5)
print("\nintraday:", rep.manifest_line())
for label, v in zip(daily.labels, daily.values):
    print(f"  {label}: {v:.5f}")
