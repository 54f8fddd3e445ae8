import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from opaque_mnl import MarketInstance  # noqa: E402


@pytest.fixture
def substitutability_inst():
    return MarketInstance([6, 5, 3], [3, 4, 9])


@pytest.fixture
def high_revenue_inst():
    return MarketInstance([1.2, 2, 1.8], [7.8, 3.5, 3.1])


@pytest.fixture
def curve_inst():
    return MarketInstance([1.95, 0.3, 2], [4.02, 4.01, 4])


@pytest.fixture
def nrv_gap_inst():
    return MarketInstance([2, 2, 2], [25, 5.5, 3])
