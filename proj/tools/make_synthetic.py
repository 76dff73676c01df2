"""Regenerate data/synthetic_prices.csv: two correlated geometric random walks on weekdays."""
import datetime as dt
import math
import random

rng = random.Random(20160101)
start, end = dt.date(2016, 1, 1), dt.date(2021, 6, 30)
prices = {"SYNA": 100.0, "SYNB": 250.0}
drift = {"SYNA": 0.0006, "SYNB": 0.0003}
vol = {"SYNA": 0.012, "SYNB": 0.018}
rows = []
day = start
while day <= end:
    if day.weekday() < 5:
        common = rng.gauss(0.0, 1.0)
        for t in prices:
            shock = 0.6 * common + 0.8 * rng.gauss(0.0, 1.0)
            prices[t] *= math.exp(drift[t] - 0.5 * vol[t] ** 2 + vol[t] * shock)
            rows.append(f"{day.isoformat()},{t},{prices[t]:.2f}")
    day += dt.timedelta(days=1)
with open("data/synthetic_prices.csv", "w", newline="\n") as f:
    f.write("date,ticker,close\n" + "\n".join(rows) + "\n")
