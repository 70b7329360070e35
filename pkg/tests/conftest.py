import csv
import datetime as dt

import numpy as np
import pytest

from budgetbid import ExpUniformModel

LAMBDA_BAR = [4.0, 6.0, 8.0, 8.0, 4.0]
PI_BAR = [5.0, 8.0, 8.0, 9.0, 3.0]


@pytest.fixture
def five_good_model():
    return ExpUniformModel(LAMBDA_BAR, PI_BAR, 1.0)


def write_panel_csv(path, n_days, zones=("EAST", "WEST"), seed=0,
                    start=dt.date(2012, 1, 1), skip=()):
    """Synthetic hourly prices; ``skip`` holds (day, zone, hour) rows to omit."""
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "location", "hour", "da_price", "rt_price"])
        for d in range(n_days):
            date = (start + dt.timedelta(days=d)).isoformat()
            for z in zones:
                for h in range(24):
                    da = 30 + 10 * np.sin(h / 24 * 2 * np.pi) + rng.gamma(2.0, 3.0)
                    rt = da + rng.normal(0.5, 6.0)
                    if (d, z, h) in skip:
                        continue
                    w.writerow([date, z, h, f"{da:.2f}", f"{rt:.2f}"])
    return path


@pytest.fixture
def panel_csv(tmp_path):
    return write_panel_csv(tmp_path / "prices.csv", 30)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
