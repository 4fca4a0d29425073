"""
Closed-form and root-finding projections used by device proxes.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from app.utils.exceptions import InvalidParametersError, RootFindError
from config.config import current_config

NEWTON_MAX_ITER = 200


def project_box_halfspace(v: np.ndarray, lo: np.ndarray, hi: np.ndarray, threshold: float,
                          tol: float = None) -> np.ndarray:
    """
    Project onto {x : lo <= x <= hi, sum(x) >= threshold}.

    The minimizer is clip(v + nu, lo, hi) for the smallest nu >= 0 that
    meets the sum constraint; nu is found with Brent's method.

    Args:
        v (np.ndarray): Point to project
        lo (np.ndarray): Lower bounds
        hi (np.ndarray): Upper bounds
        threshold (float): Required minimum sum E
        tol (float, optional): Root tolerance. Defaults to ROOT_TOL.

    Returns:
        np.ndarray: The projection
    """
    tol = current_config.ROOT_TOL if tol is None else tol
    v = np.asarray(v, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), v.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), v.shape)
    if np.any(lo > hi):
        raise InvalidParametersError("box lower bound exceeds upper bound")

    capacity = float(np.sum(hi))
    if capacity < threshold:
        raise InvalidParametersError(f"box holds at most {capacity}, below the required {threshold}")

    x = np.clip(v, lo, hi)
    if np.sum(x) >= threshold:
        return x
    if capacity == threshold:
        return hi.copy()

    def shortfall(nu):
        return float(np.sum(np.clip(v + nu, lo, hi))) - threshold

    upper = float(np.max(hi - v))
    try:
        nu = brentq(shortfall, 0.0, upper, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (ValueError, RuntimeError) as e:
        raise RootFindError(f"box/halfspace multiplier search failed: {e}")
    x = np.clip(v + nu, lo, hi)
    # Close the last rounding gap on a free coordinate so sum(x) >= threshold holds exactly.
    gap = threshold - float(np.sum(x))
    if gap > 0:
        free = np.flatnonzero(x + gap <= hi)
        if free.size:
            x[free[0]] += gap
    return x


@dataclass(frozen=True)
class LineHull:
    """
    Convex hull of a lossy line's operating points in (s, d) coordinates,
    s = p1 + p2 (loss) and d = p1 - p2.

    The loss curve s(d) = g (2 - sqrt(4 - d^2/b^2)) is the lower arc of the
    ellipse (s - 2g)^2/(2g)^2 + d^2/(2b)^2 = 1; the hull is the part of the
    ellipse interior below the chord s = s(cap). A lossless line (g None) is
    the segment s = 0, |d| <= cap.
    """
    cap: Optional[float]
    g: Optional[float] = None
    b: Optional[float] = None

    @property
    def lossless(self) -> bool:
        return self.g is None

    @property
    def chord(self) -> float:
        """Loss at full capacity, s(cap)."""
        if self.lossless:
            return 0.0
        return loss_curve(self.cap, self.g, self.b)


def loss_curve(d, g: float, b: float):
    """Smallest line loss s compatible with a difference d = p1 - p2."""
    d = np.asarray(d, dtype=float)
    return g * (2.0 - np.sqrt(np.maximum(4.0 - (d / b) ** 2, 0.0)))


def project_ellipse(w: np.ndarray, axes: np.ndarray, tol: float = None) -> np.ndarray:
    """
    Project centred points onto the solid axis-aligned ellipse sum(x_i^2/a_i^2) <= 1.

    Outside points solve x_i = a_i^2 w_i / (a_i^2 + lam) for the multiplier
    lam > 0 of the boundary. The secular function is convex and decreasing
    in lam, so Newton's method started at 0 increases monotonically to the
    root; all points are solved at once.

    Args:
        w (np.ndarray): Points, shape (2, ...)
        axes (np.ndarray): Semi-axes a, shape (2,)
        tol (float, optional): Root tolerance. Defaults to ROOT_TOL.

    Returns:
        np.ndarray: Projected points, same shape as w
    """
    tol = current_config.ROOT_TOL if tol is None else tol
    w = np.asarray(w, dtype=float)
    a2 = (np.asarray(axes, dtype=float) ** 2).reshape((2,) + (1,) * (w.ndim - 1))
    level = np.sum(w ** 2 / a2, axis=0)
    outside = level > 1.0
    if not np.any(outside):
        return w.copy()

    wo = w[:, outside]
    a2o = a2.reshape(2, 1)
    lam = np.zeros(wo.shape[1])
    for _ in range(NEWTON_MAX_ITER):
        denom = a2o + lam
        terms = a2o * wo ** 2 / denom ** 2
        value = np.sum(terms, axis=0) - 1.0
        if np.all(value <= tol):
            break
        slope = -2.0 * np.sum(terms / denom, axis=0)
        lam = lam - np.where(value > tol, value / slope, 0.0)
    else:
        raise RootFindError("ellipse projection multiplier did not converge")

    out = w.copy()
    out[:, outside] = a2o * wo / (a2o + lam)
    return out


def project_convex_region_2d(v: np.ndarray, region: LineHull, tol: float = None) -> np.ndarray:
    """
    Euclidean projection of line operating points onto the line's hull.

    (p1, p2) -> (s, d) is an orthogonal map scaled by sqrt(2), so projecting
    in (s, d) coordinates gives the projection in (p1, p2). If the ellipse
    projection lands above the chord, the chord constraint is active and the
    answer is the nearest chord point (a hull vertex when d is clipped).

    Args:
        v (np.ndarray): Points (p1, p2), shape (2, ...)
        region (LineHull): The hull
        tol (float, optional): Root tolerance for the ellipse multiplier

    Returns:
        np.ndarray: Projected points, same shape as v
    """
    v = np.asarray(v, dtype=float)
    s = v[0] + v[1]
    d = v[0] - v[1]
    cap = np.inf if region.cap is None else region.cap

    if region.lossless:
        s_proj = np.zeros_like(s)
        d_proj = np.clip(d, -cap, cap)
    else:
        g, b = region.g, region.b
        centred = np.stack([s - 2.0 * g, d])
        proj = project_ellipse(centred, np.array([2.0 * g, 2.0 * b]), tol=tol)
        s_proj = proj[0] + 2.0 * g
        d_proj = proj[1]
        chord = region.chord
        above = s_proj > chord
        s_proj = np.where(above, chord, s_proj)
        d_proj = np.where(above, np.clip(d, -cap, cap), d_proj)

    return np.stack([(s_proj + d_proj) / 2.0, (s_proj - d_proj) / 2.0])
