"""Regenerate tests/fixtures/panel_10stock.csv.

Synthetic 10-stock daily close panel spanning 2018-2022: weekdays minus a
seeded draw of holidays, sized to 988 rows in 2018-2021 and 248 rows in
2022.  Prices follow a one-factor geometric random walk rounded to 2
decimals.  Everything is pinned by SEED; rerunning reproduces the checked-in
file byte for byte.
"""

import argparse
import datetime
import pathlib

import numpy as np

SEED = 2018
TICKERS = (
    "RELIANCE",
    "ULTRACEMCO",
    "TATASTEEL",
    "NTPC",
    "JSWSTEEL",
    "ONGC",
    "GRASIM",
    "HINDALCO",
    "COALINDIA",
    "UPL",
)
TRAIN_ROWS = 988
TEST_ROWS = 248


def weekdays(start: datetime.date, end: datetime.date) -> list[datetime.date]:
    days = []
    d = start
    while d <= end:
        if d.weekday() < 5:
            days.append(d)
        d += datetime.timedelta(days=1)
    return days


def trading_dates(rng: np.random.Generator) -> list[str]:
    train = weekdays(datetime.date(2018, 1, 1), datetime.date(2021, 12, 31))
    test = weekdays(datetime.date(2022, 1, 1), datetime.date(2022, 12, 31))
    keep_train = sorted(rng.choice(len(train), size=TRAIN_ROWS, replace=False))
    keep_test = sorted(rng.choice(len(test), size=TEST_ROWS, replace=False))
    kept = [train[i] for i in keep_train] + [test[i] for i in keep_test]
    return [d.isoformat() for d in kept]


def price_paths(rng: np.random.Generator, n_rows: int) -> np.ndarray:
    n = len(TICKERS)
    start = rng.uniform(100.0, 2500.0, size=n)
    beta = rng.uniform(0.6, 1.4, size=n)
    drift = rng.normal(0.0004, 0.0002, size=n)
    sigma = rng.uniform(0.010, 0.022, size=n)
    market = rng.normal(0.0003, 0.009, size=n_rows - 1)
    noise = rng.normal(0.0, 1.0, size=(n_rows - 1, n)) * sigma
    log_returns = beta * market[:, None] + drift + noise
    paths = np.empty((n_rows, n))
    paths[0] = start
    paths[1:] = start * np.exp(np.cumsum(log_returns, axis=0))
    return np.round(paths, 2)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default=str(
            pathlib.Path(__file__).resolve().parent.parent
            / "tests" / "fixtures" / "panel_10stock.csv"
        ),
    )
    args = parser.parse_args()

    rng = np.random.Generator(np.random.PCG64(SEED))
    dates = trading_dates(rng)
    prices = price_paths(rng, len(dates))
    assert np.all(prices > 0)
    assert sum(1 for d in dates if d <= "2021-12-31") == TRAIN_ROWS
    assert sum(1 for d in dates if d >= "2022-01-01") == TEST_ROWS

    lines = ["date," + ",".join(TICKERS)]
    for date, row in zip(dates, prices):
        lines.append(date + "," + ",".join(f"{p:.2f}" for p in row))
    pathlib.Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(dates)} rows to {args.out}")


if __name__ == "__main__":
    main()
