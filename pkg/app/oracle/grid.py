"""
Exhaustive grid minimization.

Grids of at most EXACT_CHUNKS * level_points points (and within budget)
are enumerated in full, chunk by chunk. Larger grids are searched by
zooming: each level evaluates a coarse mesh over the current window, then
shrinks the window to ZOOM_MARGIN mesh spacings around the best point, until
the window holds few enough points of the target grid to enumerate exactly.
Coarse levels evaluate objectives with a feasibility tolerance equal to the
current spacing, so they do not miss thin feasible sets; the best coarse
point of every level is snapped to the target grid and kept as a candidate
in case the final window misses the optimum. Target grid points are always
evaluated with the tight tolerance EXACT_TOL.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.utils.exceptions import InfeasibleProblemError, OracleBudgetError
from config.config import current_config

# Hard cap on evaluated points per oracle call
MAX_POINT_BUDGET = int(1e8)
MIN_POINTS_PER_AXIS = 6
EXACT_CHUNKS = 50
EXACT_TOL = 1e-9
ZOOM_MARGIN = 3

BatchObjective = Callable[[np.ndarray, float], np.ndarray]


@dataclass
class GridSpec:
    """
    Per-variable ranges and a common step.

    lo and hi are scalars (same range for every variable) or one value per
    variable.
    """
    lo: Union[float, Sequence[float]]
    hi: Union[float, Sequence[float]]
    step: float
    budget: int = field(default_factory=lambda: current_config.GRID_POINT_BUDGET)
    level_points: int = field(default_factory=lambda: current_config.GRID_LEVEL_POINTS)

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.budget > MAX_POINT_BUDGET:
            raise OracleBudgetError(f"grid budget {self.budget} exceeds {MAX_POINT_BUDGET} points")
        if np.any(np.asarray(self.lo, dtype=float) > np.asarray(self.hi, dtype=float)):
            raise ValueError("grid lower bound exceeds upper bound")

    def bounds(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("grid ranges must be finite")
        return lo, hi

    def restricted(self, lo: np.ndarray, hi: np.ndarray) -> "GridSpec":
        """Same step and budget on the intersection with [lo, hi]."""
        n = np.size(lo)
        own_lo, own_hi = self.bounds(n)
        new_lo = np.maximum(own_lo, lo)
        new_hi = np.minimum(own_hi, hi)
        if np.any(new_lo > new_hi):
            raise InfeasibleProblemError("grid range does not meet the variable bounds")
        return GridSpec(lo=new_lo, hi=new_hi, step=self.step, budget=self.budget, level_points=self.level_points)


def _aligned_axes(origin, window_lo, window_hi, step):
    """Points origin + k*step inside each window, per axis."""
    axes = []
    for o, a, b in zip(origin, window_lo, window_hi):
        k_lo = int(np.ceil((a - o) / step - 1e-9))
        k_hi = int(np.floor((b - o) / step + 1e-9))
        axes.append(o + step * np.arange(k_lo, max(k_hi, k_lo) + 1))
    return axes


def _mesh(axes) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _argmin(fn: BatchObjective, points: np.ndarray, tol: float) -> Tuple[np.ndarray, float]:
    values = np.asarray(fn(points, tol), dtype=float)
    values = np.where(np.isnan(values), np.inf, values)
    i = int(np.argmin(values))
    return points[i], float(values[i])


def _enumerate(fn: BatchObjective, axes, chunk: int) -> Tuple[np.ndarray, float]:
    """Exact minimum over the product of axes, chunk points at a time."""
    sizes = [a.size for a in axes]
    total = int(np.prod(sizes))
    best, value = None, np.inf
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), sizes)
        points = np.stack([axis[i] for axis, i in zip(axes, idx)], axis=-1)
        point, point_value = _argmin(fn, points, EXACT_TOL)
        if best is None or point_value < value:
            best, value = point, point_value
    return best, value


def _snap(point: np.ndarray, lo: np.ndarray, hi: np.ndarray, step: float) -> np.ndarray:
    k = np.rint((point - lo) / step)
    k = np.clip(k, 0, np.floor((hi - lo) / step + 1e-9))
    return lo + k * step


def grid_minimize(fn: BatchObjective, grid: GridSpec, n: int) -> Tuple[np.ndarray, float]:
    """
    Minimize fn over the grid lo + k * step.

    Args:
        fn: Batch objective taking points of shape (K, n) and a feasibility
            tolerance, returning K values (+inf when infeasible)
        grid (GridSpec): Ranges, step and budget
        n (int): Number of variables

    Returns:
        tuple: (minimizer, value)
    """
    lo, hi = grid.bounds(n)
    window_lo, window_hi = lo.copy(), hi.copy()
    exact_limit = min(grid.budget, EXACT_CHUNKS * grid.level_points)
    incumbent, incumbent_value = None, np.inf
    evaluated = 0
    level = 0
    while True:
        axes = _aligned_axes(lo, window_lo, window_hi, grid.step)
        exact = int(np.prod([a.size for a in axes], dtype=float))
        if exact <= grid.level_points or (level == 0 and exact <= exact_limit):
            evaluated += exact
            if evaluated > grid.budget:
                raise OracleBudgetError(f"grid search needs more than {grid.budget} points")
            best, value = _enumerate(fn, axes, grid.level_points)
            break

        per_axis = max(MIN_POINTS_PER_AXIS, int(grid.level_points ** (1.0 / n)))
        coarse = [np.linspace(a, b, min(per_axis, ax.size)) for a, b, ax in zip(window_lo, window_hi, axes)]
        points = _mesh(coarse)
        evaluated += len(points) + 1
        if evaluated > grid.budget:
            raise OracleBudgetError(f"grid search needs more than {grid.budget} points")
        spacing = np.array([c[1] - c[0] if c.size > 1 else grid.step for c in coarse])
        best, value = _argmin(fn, points, float(spacing.max()))
        if not np.isfinite(value):
            raise InfeasibleProblemError(f"no feasible grid point at zoom level {level}")

        snapped = _snap(best, lo, hi, grid.step)
        snapped_value = float(np.asarray(fn(snapped[None], EXACT_TOL), dtype=float)[0])
        if snapped_value < incumbent_value:
            incumbent, incumbent_value = snapped, snapped_value

        window_lo = np.maximum(lo, best - ZOOM_MARGIN * spacing)
        window_hi = np.minimum(hi, best + ZOOM_MARGIN * spacing)
        level += 1

    if incumbent is not None and incumbent_value < value:
        best, value = incumbent, incumbent_value
    if not np.isfinite(value):
        raise InfeasibleProblemError("no feasible grid point")
    logger.debug(f"Grid search over {n} variables: {evaluated} points, {level} zoom levels, value {value:.6g}")
    return best, value


def prox_oracle(objective: Callable, v: np.ndarray, rho: float, grid: GridSpec,
                tol: Optional[float] = None) -> np.ndarray:
    """
    Grid minimizer of objective(y) + (rho/2) ||v - y||^2.

    Args:
        objective: Batch objective over schedule rows, called as
            objective(y, tol) with y of shape (K, rows, T); a device's
            objective method fits
        v (np.ndarray): Prox argument, shape (rows, T)
        rho (float): Penalty parameter
        grid (GridSpec): Search grid, one range per entry of v
        tol (float, optional): Fixed feasibility tolerance. Defaults to the
            spacing of each search level.

    Returns:
        np.ndarray: Minimizer of shape (rows, T), accurate to the grid step
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    shape = v.shape
    flat = v.ravel()

    def fn(points, level_tol):
        y = points.reshape((-1,) + shape)
        penalty = 0.5 * rho * np.sum((points - flat) ** 2, axis=-1)
        return objective(y, level_tol if tol is None else tol) + penalty

    best, _ = grid_minimize(fn, grid, flat.size)
    return best.reshape(shape)
