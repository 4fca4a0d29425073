import os
import sys

# Select TestingConfig before any app module reads the configuration
os.environ.setdefault("ENV", "testing")
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from app.devices.params import FixedLoadParams, GeneratorParams
from app.network.examples import example_network
from app.network.model import Network


def single_net(n_devices: int, horizon: int) -> Network:
    """n one-terminal devices sharing one net; device d owns terminal d."""
    return Network.build(
        horizon=horizon,
        device_terminals=[[d] for d in range(n_devices)],
        net_terminals=[list(range(n_devices))],
    )


@pytest.fixture
def example():
    """The three-bus example network and its specs."""
    return example_network(horizon=24)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_instance():
    """Two quadratic generators and a fixed load on one net, T = 1."""
    specs = [
        GeneratorParams(P_max=10.0, alpha=1.0, beta=0.0),
        GeneratorParams(P_max=10.0, alpha=0.5, beta=1.0),
        FixedLoadParams(l=4.0),
    ]
    return single_net(3, 1), specs
