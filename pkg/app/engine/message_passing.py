"""
Prox-average message passing.

Each iteration has two phases separated by a barrier:

1. device phase: p_d <- prox_{f_d, rho}(p_d - p_bar_d - u_d) for every device
2. net phase:    p_bar <- per-net average of p, u <- u + p_bar

The penalty rho adapts through a proportional-derivative rule on the
residual ratio; u is rescaled with it so the unscaled duals rho*u (and hence
the prices) are continuous.
"""
import math
import time
from dataclasses import replace
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.devices import BaseDevice, make_device
from app.engine.scheduler import DevicePhase
from app.engine.state import IterationState, Solution, SolveConfig, TraceRow
from app.network.model import Network, check_schedule, net_average, validate
from app.utils.exceptions import (
    DimensionMismatchError,
    NetworkValidationError,
    NonFiniteIterateError,
    ProxError,
)
from app.utils.helpers import l2_norm
from config.constants import SolveStatus


def build_devices(specs: Sequence, network: Network) -> list:
    """Device objects for specs (already-built devices pass through)."""
    if len(specs) != network.n_devices:
        raise DimensionMismatchError(f"{len(specs)} specs for {network.n_devices} devices")
    devices = []
    for d, spec in enumerate(specs):
        device = spec if isinstance(spec, BaseDevice) else make_device(spec, network.horizon)
        if device.n_terminals != len(network.devices[d].terminals):
            raise DimensionMismatchError(
                f"device {d} ({device.kind}) has {device.n_terminals} terminals, network lists "
                f"{len(network.devices[d].terminals)}"
            )
        devices.append(device)
    return devices


def initial_state(network: Network, config: SolveConfig,
                  init: Optional[Tuple[np.ndarray, np.ndarray, float]] = None) -> IterationState:
    """
    Cold start (p = 0, u = 0, rho = rho0) or warm start from (p, u, rho).

    A warm-start u is re-averaged per net so its rows agree within each net.
    """
    lo, hi = config.rho_bounds
    if init is None:
        p = np.zeros(network.shape)
        u = np.zeros(network.shape)
        rho = config.rho0
    else:
        p, u, rho = init
        p = check_schedule(p, network).copy()
        u = net_average(check_schedule(u, network), network)
        rho = min(max(float(rho), lo), hi)
    p_bar = net_average(p, network)
    return IterationState(p=p, u=u, p_bar=p_bar, p_prev=p.copy(), p_bar_prev=p_bar.copy(), rho=rho)


def iterate(state: IterationState, network: Network, devices: Sequence,
            phase: DevicePhase = None) -> IterationState:
    """
    One prox-average iteration.

    Args:
        state (IterationState): Current iterate
        network (Network): The network
        devices (list): Device objects or specs, indexed by device id
        phase (DevicePhase, optional): Device phase runner to reuse

    Returns:
        IterationState: The next iterate (k incremented)
    """
    if phase is None:
        devices = build_devices(devices, network)
        phase = DevicePhase(network, devices)

    v = state.p - state.p_bar - state.u
    p = np.empty_like(state.p)
    longest = phase.run(v, state.rho, p)

    finite = np.isfinite(p).all(axis=1)
    if not finite.all():
        raise NonFiniteIterateError(state.k + 1, np.flatnonzero(~finite).tolist())

    start = time.perf_counter()
    p_bar = net_average(p, network)
    u = state.u + p_bar
    net_time = time.perf_counter() - start

    return IterationState(
        p=p, u=u, p_bar=p_bar, p_prev=state.p, p_bar_prev=state.p_bar,
        rho=state.rho, v_prev=state.v_prev, k=state.k + 1,
        device_phase_s=longest, net_phase_s=net_time,
    )


def residuals(state: IterationState, deterministic: bool = True) -> Tuple[float, float]:
    """
    Primal and dual residual norms.

    r = p_bar and s = rho ((p - p_bar) - (p_prev - p_bar_prev)), both as
    Euclidean norms over all terminals and periods.
    """
    norm = l2_norm if deterministic else (lambda x: float(np.linalg.norm(x)))
    r = norm(state.p_bar)
    s = state.rho * norm((state.p - state.p_bar) - (state.p_prev - state.p_bar_prev))
    return r, s


def stopping_threshold(config: SolveConfig, network: Network) -> float:
    return config.eps_abs * math.sqrt(network.n_terminals * network.horizon)


def check_stop(r_norm: float, s_norm: float, config: SolveConfig, network: Network) -> bool:
    """True iff both residuals are within eps_abs * sqrt(|T| T)."""
    threshold = stopping_threshold(config, network)
    return r_norm <= threshold and s_norm <= threshold


def update_rho(state: IterationState, r_norm: float, s_norm: float, config: SolveConfig) -> IterationState:
    """
    Adapt rho and rescale u.

    v = rho r / s - 1, rho' = clip(rho exp(lambda v + mu (v - v_prev))),
    u' = (rho / rho') u. Skipped when s = 0 and after rho_freeze_iter.
    """
    if state.k > config.rho_freeze_iter:
        return state
    if s_norm == 0:
        logger.debug(f"Iteration {state.k}: dual residual is zero, rho update skipped")
        return state

    lo, hi = config.rho_bounds
    v = state.rho * r_norm / s_norm - 1.0
    rho = state.rho * math.exp(config.rho_lambda * v + config.rho_mu * (v - state.v_prev))
    rho = min(max(rho, lo), hi)
    u = state.u if rho == state.rho else state.u * (state.rho / rho)
    return replace(state, rho=rho, u=u, v_prev=v)


def _net_rows(network: Network) -> np.ndarray:
    return np.array([idx[0] for idx in network.net_index], dtype=np.intp)


def net_duals(state: IterationState, network: Network) -> np.ndarray:
    """Unscaled balance multipliers rho u, one row per net."""
    return state.rho * state.u[_net_rows(network)]


def prices(state: IterationState, network: Network) -> np.ndarray:
    """Locational marginal prices rho u / |n|, one row per net."""
    return net_duals(state, network) / network.net_sizes[:, None]


def total_objective(devices: Sequence, p: np.ndarray, network: Network) -> float:
    """Sum of device objectives; +inf if any device is infeasible."""
    return float(sum(dev.objective(p[idx]) for dev, idx in zip(devices, network.device_index)))


def peer_to_peer_time(solution: Solution) -> float:
    """
    Solve time on a network where every device computes in parallel:
    the sum over iterations of the slowest prox plus the net phase.
    """
    return float(sum(row.device_phase_s + row.net_phase_s for row in solution.trace))


def solve(network: Network, specs: Sequence, config: SolveConfig = None,
          init: Optional[Tuple[np.ndarray, np.ndarray, float]] = None) -> Solution:
    """
    Run prox-average message passing to convergence.

    Args:
        network (Network): Validated network
        specs (list): DeviceSpec (or device) per device id
        config (SolveConfig, optional): Solver settings. Defaults to SolveConfig().
        init (tuple, optional): Warm start (p, u, rho)

    Returns:
        Solution: Schedules, prices, trace and status
    """
    config = config or SolveConfig()
    report = validate(network)
    if not report.ok:
        raise NetworkValidationError(report)
    devices = build_devices(specs, network)

    state = initial_state(network, config, init)
    scale = math.sqrt(network.n_terminals * network.horizon)
    reference = config.reference_objective
    status = SolveStatus.MAX_ITER
    message = ""
    trace = []

    logger.info(
        f"Solving {network.n_devices} devices on {network.n_nets} nets "
        f"({network.n_terminals} terminals, T={network.horizon}, threads={config.threads})"
    )
    start = time.perf_counter()
    with DevicePhase(network, devices, config.threads) as phase:
        try:
            while state.k < config.max_iter:
                state = iterate(state, network, devices, phase)
                r_norm, s_norm = residuals(state, config.deterministic)
                objective = total_objective(devices, state.p, network)
                reported = objective if math.isfinite(objective) else float("nan")
                trace.append(TraceRow(
                    k=state.k,
                    rho=state.rho,
                    r_norm=r_norm,
                    s_norm=s_norm,
                    objective=reported,
                    primal_infeasibility=r_norm / scale,
                    relative_suboptimality=(
                        abs(reported - reference) / abs(reference) if reference else float("nan")
                    ),
                    device_phase_s=state.device_phase_s,
                    net_phase_s=state.net_phase_s,
                ))
                if state.k % config.log_every == 0:
                    logger.debug(
                        f"k={state.k} rho={state.rho:.4g} r={r_norm:.3e} s={s_norm:.3e} f={reported:.6g}"
                    )
                if check_stop(r_norm, s_norm, config, network):
                    status = SolveStatus.CONVERGED
                    break
                state = update_rho(state, r_norm, s_norm, config)
        except ProxError as e:
            status = SolveStatus.PROX_FAILURE
            message = str(e)
            logger.error(f"Solve stopped at iteration {state.k + 1}: {message}")

    elapsed = time.perf_counter() - start
    objective = total_objective(devices, state.p, network)
    logger.info(f"Solve finished: {status} after {state.k} iterations in {elapsed:.2f}s, objective {objective:.6g}")

    return Solution(
        p=state.p,
        prices=prices(state, network),
        net_duals=net_duals(state, network),
        objective=objective,
        status=status,
        iterations=state.k,
        rho=state.rho,
        u=state.u,
        trace=trace,
        solve_time_s=elapsed,
        message=message,
    )
