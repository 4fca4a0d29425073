"""
Transmission line calibration.

Lines are sized from a pre-solve in which every line is lossless, has no
capacity limit and carries a small quadratic cost. Each line then gets
C_max = max(10, 4 F_max), where F_max is its largest pre-solve flow, and a
loss model whose loss at full capacity is a random 5-15 % of C_max.
"""
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from app.devices.params import LineParams
from app.engine import Solution, SolveConfig, solve
from app.netgen.attach import calibration_line
from app.network.model import Network
from app.utils.exceptions import CalibrationError
from config.constants import DeviceKind, SolveStatus

MIN_CAPACITY = 10.0
CAPACITY_FACTOR = 4.0


def line_ids(specs: Sequence) -> List[int]:
    return [d for d, spec in enumerate(specs) if spec.kind == DeviceKind.TRANSMISSION_LINE]


def max_flows(network: Network, p: np.ndarray, lines: Sequence[int]) -> np.ndarray:
    """Largest |p1 - p2| / 2 over the horizon, one entry per line."""
    flows = []
    for d in lines:
        first, second = network.device_index[d]
        flows.append(float(np.max(np.abs(p[first] - p[second]) / 2)))
    return np.asarray(flows)


def calibrate_lines(network: Network, specs: Sequence, rng: np.random.Generator,
                    epsilon: float = 1e-3, loss_range: Tuple[float, float] = (0.05, 0.15),
                    gamma_range: Tuple[float, float] = (4.5, 5.5),
                    solve_config: SolveConfig = None) -> Tuple[List, Solution]:
    """
    Replace every line spec with a calibrated lossy line.

    Args:
        network (Network): The network
        specs (list): Device specs; line entries are overwritten
        rng (np.random.Generator): Calibration stream (two draws per line)
        epsilon (float, optional): Quadratic line cost of the pre-solve. Defaults to 1e-3.
        loss_range (tuple, optional): Range of loss at capacity, as a fraction of C_max
        gamma_range (tuple, optional): Range of b / g
        solve_config (SolveConfig, optional): Settings of the pre-solve

    Returns:
        tuple: (calibrated specs, pre-solve Solution)
    """
    lines = line_ids(specs)
    pre_specs = list(specs)
    for d in lines:
        pre_specs[d] = calibration_line(epsilon)

    logger.info(f"Calibrating {len(lines)} lines with a lossless pre-solve (epsilon={epsilon})")
    solution = solve(network, pre_specs, solve_config)
    if solution.status == SolveStatus.PROX_FAILURE:
        raise CalibrationError(f"Calibration pre-solve failed: {solution.message}")
    if not solution.converged:
        logger.warning(
            f"Calibration pre-solve stopped after {solution.iterations} iterations without "
            f"converging; sizing lines from the last iterate"
        )

    calibrated = list(specs)
    for d, f_max in zip(lines, max_flows(network, solution.p, lines)):
        capacity = max(MIN_CAPACITY, CAPACITY_FACTOR * f_max)
        fraction = rng.uniform(*loss_range)
        gamma = rng.uniform(*gamma_range)
        calibrated[d] = LineParams.with_loss_at_capacity(capacity, fraction, gamma)
    return calibrated, solution
