"""
Device attachment and parameter sampling for generated networks.

Every net receives exactly one single-terminal device drawn from the device
mix; every graph edge becomes a two-terminal transmission line whose
terminals join the two endpoint nets.
"""
from collections import Counter
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from app.devices.params import (
    BatteryParams,
    CurtailableLoadParams,
    DeferrableLoadParams,
    FixedLoadParams,
    GeneratorParams,
    LineParams,
)
from app.netgen.gen_config import GenConfig
from app.network.model import Network
from app.utils.exceptions import InvalidParametersError
from app.utils.helpers import substream
from config.constants import DeviceKind, GeneratorClass, RngStream

# Shortest deferrable window, in periods (D - A)
MIN_DEFERRABLE_SPAN = 7


def _generator(rng: np.random.Generator, horizon: int, **_) -> GeneratorParams:
    cls = GeneratorClass.ALL[rng.integers(len(GeneratorClass.ALL))]
    p_min, p_max, r_max, alpha, beta = GeneratorClass.TABLE[cls]
    return GeneratorParams(P_min=p_min, P_max=p_max, R_max=r_max, alpha=alpha, beta=beta)


def _battery(rng: np.random.Generator, horizon: int, **_) -> BatteryParams:
    q_max = rng.uniform(20.0, 50.0)
    rate = rng.uniform(5.0, 10.0)
    return BatteryParams(Q_max=q_max, C_max=rate, D_max=rate, q_init=0.0)


def _fixed_load(rng: np.random.Generator, horizon: int, **_) -> FixedLoadParams:
    a = rng.uniform(1.0, 5.0)
    c = a + rng.uniform(0.0, 0.5)
    phase = rng.uniform(60.0, 72.0)
    tau = np.arange(1, horizon + 1)
    return FixedLoadParams(l=(c + a * np.sin(2 * np.pi * (tau - phase) / horizon)).tolist())


def _deferrable_load(rng: np.random.Generator, horizon: int, energy_scale: float = 1.0) -> DeferrableLoadParams:
    if horizon <= MIN_DEFERRABLE_SPAN:
        raise InvalidParametersError(
            f"deferrable loads need a horizon above {MIN_DEFERRABLE_SPAN} periods, got {horizon}"
        )
    energy = rng.uniform(500.0, 1000.0) * energy_scale
    arrival = int(rng.integers(1, horizon - MIN_DEFERRABLE_SPAN + 1))
    deadline = int(rng.integers(arrival + MIN_DEFERRABLE_SPAN, horizon + 1))
    return DeferrableLoadParams(E=energy, A=arrival, D=deadline, L_max=2 * energy / (deadline - arrival))


def _curtailable_load(rng: np.random.Generator, horizon: int, **_) -> CurtailableLoadParams:
    level = rng.uniform(5.0, 15.0)
    return CurtailableLoadParams(l=level, alpha=rng.uniform(1.0, 2.0))


SAMPLERS = {
    DeviceKind.GENERATOR: _generator,
    DeviceKind.BATTERY: _battery,
    DeviceKind.FIXED_LOAD: _fixed_load,
    DeviceKind.DEFERRABLE_LOAD: _deferrable_load,
    DeviceKind.CURTAILABLE_LOAD: _curtailable_load,
}


def sample_params(kind: str, rng: np.random.Generator, horizon: int, energy_scale: float = 1.0):
    """
    Draw a parameter record for a generated device.

    Args:
        kind (str): Device kind (generator, battery or one of the loads)
        rng (np.random.Generator): Parameter stream
        horizon (int): Number of periods T
        energy_scale (float, optional): Multiplier on deferrable energies. Defaults to 1.0.

    Returns:
        DeviceParams: The sampled record
    """
    sampler = SAMPLERS.get(kind)
    if sampler is None:
        raise InvalidParametersError(f"Generated benchmarks do not include {kind} devices")
    return sampler(rng, horizon, energy_scale=energy_scale)


def calibration_line(epsilon: float) -> LineParams:
    """Lossless, uncapacitated line with cost epsilon (p1^2 + p2^2)."""
    return LineParams(lossless=True, quad_cost=epsilon)


def attach_devices(graph: nx.Graph, cfg: GenConfig, mix_rng: np.random.Generator = None,
                   params_rng: np.random.Generator = None) -> Tuple[Network, List]:
    """
    Build the network and device specs for a net graph.

    Terminals 0..N-1 belong to the one-terminal devices (device d on net d);
    line e between nets a < b owns terminals N + 2e (net a) and N + 2e + 1
    (net b). Line specs are lossless calibration placeholders until
    calibrate_lines replaces them.

    Args:
        graph (nx.Graph): Connected net graph with nodes 0..N-1
        cfg (GenConfig): Generator settings
        mix_rng (np.random.Generator, optional): Device kind stream
        params_rng (np.random.Generator, optional): Parameter stream

    Returns:
        tuple: (Network, specs)
    """
    mix_rng = mix_rng if mix_rng is not None else substream(cfg.seed, RngStream.MIX)
    params_rng = params_rng if params_rng is not None else substream(cfg.seed, RngStream.PARAMS)
    n = graph.number_of_nodes()

    kinds = list(cfg.device_mix)
    weights = np.array([cfg.device_mix[k] for k in kinds], dtype=float)
    drawn = [kinds[i] for i in mix_rng.choice(len(kinds), size=n, p=weights / weights.sum())]
    specs = [
        sample_params(kind, params_rng, cfg.horizon, cfg.deferrable_energy_scale) for kind in drawn
    ]

    edges = sorted(tuple(sorted(e)) for e in graph.edges())
    device_terminals = [[i] for i in range(n)]
    net_terminals = [[i] for i in range(n)]
    for e, (a, b) in enumerate(edges):
        t_a, t_b = n + 2 * e, n + 2 * e + 1
        device_terminals.append([t_a, t_b])
        net_terminals[a].append(t_a)
        net_terminals[b].append(t_b)
        specs.append(calibration_line(cfg.calibration_epsilon))

    labels = [f"{kind}_{i}" for i, kind in enumerate(drawn)] + [f"line_{a}_{b}" for a, b in edges]
    network = Network.build(
        horizon=cfg.horizon,
        device_terminals=device_terminals,
        net_terminals=net_terminals,
        device_labels=labels,
        net_labels=[f"net_{i}" for i in range(n)],
    )
    logger.info(f"Attached {n} devices and {len(edges)} lines: {dict(device_counts(specs))}")
    return network, specs


def device_counts(specs) -> Dict[str, int]:
    """Number of devices per kind, in DeviceKind order."""
    counts = Counter(spec.kind for spec in specs)
    return {kind: counts[kind] for kind in DeviceKind.ALL if counts[kind]}
