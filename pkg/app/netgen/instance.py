from dataclasses import dataclass, field
from typing import Any, Dict, List

import networkx as nx
from loguru import logger

from app.engine import SolveConfig
from app.netgen.attach import attach_devices, device_counts
from app.netgen.calibration import calibrate_lines
from app.netgen.gen_config import GenConfig
from app.netgen.topology import average_degree, gen_topology
from app.network.model import Network, validate
from app.utils.exceptions import NetworkValidationError
from app.utils.helpers import substreams
from config.config import current_config
from config.constants import RngStream


@dataclass
class Instance:
    """A generated scheduling problem and how it was made."""
    network: Network
    specs: List
    graph: nx.Graph
    provenance: Dict[str, Any] = field(default_factory=dict)


def generate_instance(cfg: GenConfig, solve_config: SolveConfig = None) -> Instance:
    """
    Generate a benchmark instance: topology, device attachment, line calibration.

    Args:
        cfg (GenConfig): Generator settings
        solve_config (SolveConfig, optional): Settings of the calibration
            pre-solve. Defaults to SolveConfig(max_iter=cfg.calibration_max_iter).

    Returns:
        Instance: Network, specs, graph and provenance
    """
    rngs = substreams(cfg.seed, RngStream.ALL)
    graph = gen_topology(cfg, rngs[RngStream.TOPOLOGY])
    network, specs = attach_devices(graph, cfg, rngs[RngStream.MIX], rngs[RngStream.PARAMS])

    report = validate(network)
    if not report.ok:
        raise NetworkValidationError(report)

    calibration = None
    if cfg.calibrate:
        solve_config = solve_config or SolveConfig(max_iter=cfg.calibration_max_iter)
        specs, pre = calibrate_lines(
            network, specs, rngs[RngStream.CALIBRATION],
            epsilon=cfg.calibration_epsilon,
            loss_range=cfg.loss_range,
            gamma_range=cfg.gamma_range,
            solve_config=solve_config,
        )
        calibration = {"status": pre.status, "iterations": pre.iterations}

    provenance = {
        "seed": cfg.seed,
        "generator_version": current_config.APP_VERSION,
        "n_nets": network.n_nets,
        "n_edges": graph.number_of_edges(),
        "average_degree": average_degree(graph),
        "topology": cfg.topology,
        "device_counts": device_counts(specs),
        "calibration": calibration,
    }
    logger.info(
        f"Generated instance seed={cfg.seed}: {network.n_nets} nets, {network.n_devices} devices, "
        f"{network.n_terminals} terminals"
    )
    return Instance(network=network, specs=specs, graph=graph, provenance=provenance)
