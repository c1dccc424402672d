import numpy as np
import pytest

from sparsefolio.market_data import ReturnPanel
from sparsefolio.synthetic import business_days


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_panel(returns, start="2020-01-02", assets=None):
    R = np.asarray(returns, dtype=float)
    assets = assets or [f"A{i}" for i in range(R.shape[1])]
    return ReturnPanel(business_days(start, R.shape[0]), assets, R)


def random_returns(rng, T, p, scale=0.01, drift=5e-4):
    return drift + scale * rng.standard_normal((T, p))


def centred(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return X - X.mean(axis=0), y - y.mean()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
