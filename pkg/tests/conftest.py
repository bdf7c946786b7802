import numpy as np
import pytest

from regime_momentum.data_model import ReturnPanel


def make_panel(returns, start="2021-01-04", ids=None):
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + returns.shape[1])
    ids = ids or tuple(f"S{i}" for i in range(returns.shape[0]))
    return ReturnPanel(dates, returns, ids)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def panel_factory():
    return make_panel
