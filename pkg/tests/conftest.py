"""
Pytest Configuration
====================
Ensures project root is in Python path for all tests, and provides the
small fleets and architectures the suites share.

Slow end-to-end tests run only with --runslow.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from rul2stage.contracts.model_contracts import ModelSpec, TrainConfig
from rul2stage.synthgen.fleet import FleetSpec, generate_fleet


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-pipeline runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# =============================================================================
# FIXTURES
# =============================================================================

@pytest.fixture
def tiny_spec():
    """Architecture small enough for per-test training and gradient checks."""
    def build(n_features=2, n_w=20, **overrides):
        values = dict(n_features=n_features, n_w=n_w, hidden_size=4,
                      layers_per_stack=1, n_stacks=2, dense_units=6)
        values.update(overrides)
        return ModelSpec(**values)
    return build


@pytest.fixture
def fast_config():
    return TrainConfig(batch_size=16, max_epochs=3, patience=2, validation_fraction=0.25, seed=0)


@pytest.fixture(scope="session")
def small_fleet():
    """Six short synthetic cells; every one is labelable with n_w=20, p=0.1."""
    return generate_fleet(FleetSpec(n_cells=6, master_seed=3, eol_range=(80, 120)))
