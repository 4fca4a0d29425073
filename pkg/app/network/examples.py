"""
Hand-built example network.

Three buses in a triangle: bus 1 feeds a generator and a load, bus 2 a
battery and a second generator, bus 3 a second load. Each bus becomes a
net and each branch a two-terminal line, for 11 terminals, 8 devices and
3 nets.
"""
from typing import List, Tuple

import numpy as np

from app.devices.params import BatteryParams, FixedLoadParams, GeneratorParams, LineParams
from app.network.model import Network


def example_network(horizon: int = 24) -> Tuple[Network, List]:
    """
    Build the three-bus example.

    Args:
        horizon (int, optional): Number of periods. Defaults to 24.

    Returns:
        tuple: (Network, specs) with specs[d] the parameters of device d
    """
    tau = np.arange(1, horizon + 1)
    wave = np.sin(2 * np.pi * tau / horizon)

    specs = [
        GeneratorParams(P_min=0.0, P_max=50.0, R_max=3.0, alpha=0.001, beta=0.1),
        FixedLoadParams(l=list(5.0 + 2.0 * wave)),
        BatteryParams(Q_max=20.0, C_max=5.0, D_max=5.0, q_init=5.0),
        GeneratorParams(P_min=0.0, P_max=20.0, R_max=5.0, alpha=0.005, beta=0.2),
        FixedLoadParams(l=list(4.0 + 1.5 * np.cos(2 * np.pi * tau / horizon))),
        LineParams.with_loss_at_capacity(C_max=20.0, loss_fraction=0.1, gamma=5.0),
        LineParams.with_loss_at_capacity(C_max=20.0, loss_fraction=0.1, gamma=5.0),
        LineParams.with_loss_at_capacity(C_max=20.0, loss_fraction=0.1, gamma=5.0),
    ]
    # terminals 0..4 belong to G1, L1, B, G2, L2; lines take pairs from 5 on
    network = Network.build(
        horizon=horizon,
        device_terminals=[[0], [1], [2], [3], [4], [5, 6], [7, 8], [9, 10]],
        net_terminals=[[0, 1, 5, 10], [2, 3, 6, 7], [4, 8, 9]],
        device_labels=["G1", "L1", "B", "G2", "L2", "T1", "T2", "T3"],
        net_labels=["bus1", "bus2", "bus3"],
    )
    return network, specs
