"""
Two-terminal transmission line.

In (s, d) = (p1 + p2, p1 - p2) coordinates a line transmitting |d| loses
at least s(d) = g (2 - sqrt(4 - d^2/b^2)) and never more than the loss at
capacity; the relaxed line may operate anywhere in that convex hull. A
lossless line is the segment p1 = -p2, |p1 - p2| <= C_max.
"""
from typing import Tuple

import numpy as np

from app.devices.base_device import BaseDevice, with_infeasible
from app.devices.params import LineParams
from app.kernel.projections import LineHull, loss_curve, project_convex_region_2d
from config.constants import DeviceKind


def line_hull(params: LineParams) -> LineHull:
    if params.lossless:
        return LineHull(cap=params.C_max)
    return LineHull(cap=params.C_max, g=params.g, b=params.b)


def _line_prox(v: np.ndarray, params: LineParams, rho: float, hull: LineHull = None) -> np.ndarray:
    if params.lossless:
        # minimize eps (p1^2 + p2^2) + rho/2 ||p - v||^2 on p1 = -p2 = x
        x = rho * (v[0] - v[1]) / (4 * params.quad_cost + 2 * rho)
        if params.C_max is not None:
            x = np.clip(x, -params.C_max / 2, params.C_max / 2)
        return np.stack([x, -x])
    return project_convex_region_2d(v, hull or line_hull(params))


def line_hull_project(v1, v2, params: LineParams, rho: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Prox of a line per period: the projection of (v1, v2) onto the line's
    relaxed operating region (scaled toward zero first when the line carries
    a quadratic cost).

    Args:
        v1: Terminal 1 values (scalar or profile)
        v2: Terminal 2 values
        params (LineParams): Line parameters
        rho (float): Penalty parameter

    Returns:
        tuple: (p1, p2)
    """
    p = _line_prox(np.stack([np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)]), params, rho)
    return p[0], p[1]


def loss_gap(params: LineParams, p1, p2) -> np.ndarray:
    """
    Distance of a schedule from the unrelaxed loss equality, per period.

    Zero when the line loses exactly s(p1 - p2); positive when the relaxed
    line dissipates more than the physical loss.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    s = p1 + p2
    if params.lossless:
        return np.abs(s)
    return s - loss_curve(p1 - p2, params.g, params.b)


class TransmissionLine(BaseDevice):
    kind = DeviceKind.TRANSMISSION_LINE
    n_terminals = 2

    def setup(self):
        self.relaxed = not self.params.lossless
        self.hull = line_hull(self.params)
        self.cap = np.inf if self.params.C_max is None else self.params.C_max

    def flow(self, p: np.ndarray) -> np.ndarray:
        """Power carried from terminal 1 to terminal 2, (p1 - p2)/2."""
        return (p[..., 0, :] - p[..., 1, :]) / 2.0

    def _objective(self, p, tol):
        p1, p2 = p[..., 0, :], p[..., 1, :]
        s, d = p1 + p2, p1 - p2
        over_capacity = np.abs(d) - self.cap
        if self.params.lossless:
            violation = np.maximum(np.abs(s), over_capacity)
            cost = self.params.quad_cost * np.sum(p1 ** 2 + p2 ** 2, axis=-1)
        else:
            below_loss = loss_curve(d, self.params.g, self.params.b) - s
            above_chord = s - self.hull.chord
            violation = np.maximum(np.maximum(below_loss, above_chord), over_capacity)
            cost = np.zeros(s.shape[:-1])
        return with_infeasible(cost, np.max(np.maximum(violation, 0.0), axis=-1), tol)

    def _prox(self, v, rho):
        return _line_prox(v, self.params, rho, self.hull)
