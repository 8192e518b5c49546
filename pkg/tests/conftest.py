import os
import sys

import numpy as np
import pytest

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.models.config import SimConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-resolution acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-resolution runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_config(tmp_path):
    """Factory for coarse, fast configurations"""
    def make(**overrides) -> SimConfig:
        values = dict(ic="four_modes", n_map=16, n_sample=16, n_psi=32, n_eval=16,
                      dt=0.125, t_end=0.5, output_dir=str(tmp_path / "run"))
        values.update(overrides)
        return SimConfig(**values)
    return make
