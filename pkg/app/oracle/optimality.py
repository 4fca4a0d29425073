"""
Certificates for prox outputs.

y = prox_{f, rho}(v) exactly when rho (v - y) is a subgradient of f at y,
that is f(z) >= f(y) + rho <v - y, z - y> for every z. The gap below is the
largest violation of that inequality over a set of probe points.
"""
from typing import Callable

import numpy as np


def prox_optimality_gap(objective: Callable, v: np.ndarray, rho: float, y: np.ndarray,
                        probes: np.ndarray) -> float:
    """
    Largest violation of the prox variational inequality over probes.

    Args:
        objective: Batch objective objective(z, tol) over schedule rows
        v (np.ndarray): Prox argument, shape (rows, T)
        rho (float): Penalty parameter
        y (np.ndarray): Candidate prox output, shape (rows, T)
        probes (np.ndarray): Probe points, shape (K, rows, T)

    Returns:
        float: max over z of f(y) + rho <v - y, z - y> - f(z); <= tol certifies y
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    probes = np.asarray(probes, dtype=float)
    f_y = float(objective(y[None], None)[0])
    f_z = np.asarray(objective(probes, 0.0), dtype=float)
    inner = np.sum((v - y)[None] * (probes - y[None]), axis=(-2, -1))
    gaps = f_y + rho * inner - f_z
    gaps = np.where(np.isfinite(f_z), gaps, -np.inf)
    return float(np.max(gaps)) if gaps.size else float("-inf")


def feasible_probes(prox: Callable, y: np.ndarray, rho: float, rng: np.random.Generator,
                    count: int = 64, scale: float = 10.0) -> np.ndarray:
    """
    Probe points in the domain of f.

    Each probe lies on the segment from y to the prox of a random point,
    both of which are in the domain, so convexity keeps the probe inside.

    Args:
        prox: Prox map, prox(v, rho) -> schedule rows
        y (np.ndarray): Candidate prox output
        rho (float): Penalty parameter
        rng (np.random.Generator): Random source
        count (int, optional): Number of probes. Defaults to 64.
        scale (float, optional): Spread of the random points. Defaults to 10.

    Returns:
        np.ndarray: Probes of shape (count, rows, T)
    """
    y = np.asarray(y, dtype=float)
    probes = np.empty((count,) + y.shape)
    for i in range(count):
        anchor = prox(y + scale * rng.standard_normal(y.shape), rho)
        weight = rng.uniform(0.0, 1.0)
        probes[i] = (1 - weight) * y + weight * anchor
    return probes
