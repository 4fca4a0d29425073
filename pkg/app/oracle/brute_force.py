"""
Brute-force reference solver for tiny single-net instances.

Devices whose power is pinned (lower bound equal to upper bound, such as
fixed loads) are set to that profile. Every other device but the last is
enumerated on a grid; the last movable device takes whatever balances the
net, so the balance constraint holds exactly.
"""
from typing import Sequence, Tuple

import numpy as np

from app.engine.message_passing import build_devices
from app.network.model import Network, validate
from app.oracle.grid import EXACT_TOL, GridSpec, grid_minimize
from app.utils.exceptions import InfeasibleProblemError, NetworkValidationError, OracleBudgetError

MAX_DEVICES = 4
MAX_HORIZON = 2


def _pinned(device) -> np.ndarray:
    """The only feasible row of a device with equal power bounds, else None."""
    lo, hi = device.power_bounds()
    if np.all(np.isfinite(lo)) and np.array_equal(lo, hi):
        return lo[0]
    return None


def brute_force_solve(network: Network, specs: Sequence, grid: GridSpec) -> Tuple[np.ndarray, float]:
    """
    Solve a tiny instance by grid enumeration.

    Args:
        network (Network): One net with at most 4 one-terminal devices, T <= 2
        specs (list): Device specs
        grid (GridSpec): Range and step for each enumerated power value

    Returns:
        tuple: (schedule matrix, optimal objective)
    """
    report = validate(network)
    if not report.ok:
        raise NetworkValidationError(report)
    if network.n_nets != 1 or network.n_devices > MAX_DEVICES or network.horizon > MAX_HORIZON:
        raise OracleBudgetError(
            f"brute force handles one net, at most {MAX_DEVICES} devices and T <= {MAX_HORIZON}"
        )
    devices = build_devices(specs, network)
    if any(dev.n_terminals != 1 for dev in devices):
        raise OracleBudgetError("brute force handles one-terminal devices only")

    T = network.horizon
    schedule = np.zeros((len(devices), T))
    movable = []
    for d, dev in enumerate(devices):
        row = _pinned(dev)
        if row is None:
            movable.append(d)
        else:
            schedule[d] = row
    pinned_total = schedule.sum(axis=0)
    pinned_cost = float(sum(devices[d].objective(schedule[d][None, :]) for d in range(len(devices)) if d not in movable))

    if not movable:
        if np.max(np.abs(pinned_total)) > EXACT_TOL:
            raise InfeasibleProblemError("pinned devices do not balance the net")
        return _to_terminals(network, schedule), pinned_cost

    free, last = movable[:-1], movable[-1]
    n = len(free) * T
    if n == 0:
        schedule[last] = -pinned_total
        value = pinned_cost + float(devices[last].objective(schedule[last][None, :], EXACT_TOL))
        if not np.isfinite(value):
            raise InfeasibleProblemError("no feasible schedule")
        return _to_terminals(network, schedule), value

    lo, hi = grid.bounds(n)
    for i, d in enumerate(free):
        dev_lo, dev_hi = devices[d].power_bounds()
        lo[i * T:(i + 1) * T] = np.maximum(lo[i * T:(i + 1) * T], dev_lo[0])
        hi[i * T:(i + 1) * T] = np.minimum(hi[i * T:(i + 1) * T], dev_hi[0])

    def fn(points, tol):
        rows = points.reshape(-1, len(free), T)
        total = np.zeros(len(points))
        for i, d in enumerate(free):
            total = total + devices[d].objective(rows[:, i:i + 1, :], tol)
        balance = -(rows.sum(axis=1) + pinned_total)
        return total + devices[last].objective(balance[:, None, :], tol)

    best, value = grid_minimize(fn, grid.restricted(lo, hi), n)
    schedule[free] = best.reshape(len(free), T)
    schedule[last] = -(schedule[free].sum(axis=0) + pinned_total)
    return _to_terminals(network, schedule), value + pinned_cost


def _to_terminals(network: Network, schedule: np.ndarray) -> np.ndarray:
    p = np.empty(network.shape)
    for d, rows in enumerate(network.device_index):
        p[rows[0]] = schedule[d]
    return p
