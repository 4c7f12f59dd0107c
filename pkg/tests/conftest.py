import pytest
from fastapi.testclient import TestClient

from config.presets import get_preset
from main import app
from services.netgraph import build_linear_scenario


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproduces a published curve; takes tens of seconds")


@pytest.fixture(scope="module")
def default_road():
    # Four relays 200 m apart, users 100 m from their nodes, UMa-NLOS at 28 GHz
    return build_linear_scenario()


@pytest.fixture(scope="module")
def los_scenario():
    return get_preset("fig3").to_scenario()


@pytest.fixture(scope="module")
def umi_scenario():
    return get_preset("fig4").to_scenario()


@pytest.fixture(scope="module")
def uma_scenario():
    return get_preset("fig5").to_scenario()


@pytest.fixture(scope="module")
def one_relay():
    return build_linear_scenario(n_relays=1, pathloss_model="uma-nlos")


@pytest.fixture(scope="module")
def client():
    # Use FastAPI TestClient for API tests
    return TestClient(app)
