import os
import sys
from pathlib import Path

# Same bootstrap as main.py: make the repository root importable
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, BASE_DIR)

import numpy as np
import pytest

from core.market_model import constant_path, path_from_series, read_path_csv
from core.strategies import RegulatoryLimits
from core.utils.event_system import EventSystem
from core.utils.logger import set_log_sink

DATA_DIR = Path(BASE_DIR) / "data"


@pytest.fixture(autouse=True)
def _reset_global_state():
    yield
    set_log_sink(None)
    EventSystem.clear_all()


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def limits():
    return RegulatoryLimits(max_participation=0.25, min_days=1, max_days=20)


@pytest.fixture
def flat_path():
    return constant_path(100.0, 1_000_000.0, 20)


@pytest.fixture
def declining_path():
    """Closes 99, 98, ..., 80 with each VWAP 0.1 above its close."""
    closes = 100.0 - np.arange(1, 21)
    return path_from_series(closes, vwaps=closes + 0.1, volumes=1_000_000.0, initial_price=100.0)


@pytest.fixture
def rising_path():
    closes = 100.0 + np.arange(1, 21)
    return path_from_series(closes, vwaps=closes - 0.1, volumes=1_000_000.0, initial_price=100.0)


@pytest.fixture
def v_shape_path():
    return read_path_csv(DATA_DIR / "paths" / "v_shape.csv")
