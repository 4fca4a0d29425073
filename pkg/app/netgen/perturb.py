"""Load perturbation for warm-start experiments."""
from typing import List, Sequence, Tuple

import numpy as np

from config.constants import DeviceKind


def _scaled(value, factor: float):
    if isinstance(value, (list, tuple, np.ndarray)):
        return (np.asarray(value, dtype=float) * factor).tolist()
    return float(value) * factor


def draw_load_factors(specs: Sequence, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """
    One lognormal factor exp(sigma X), X ~ N(0, 1), per load device.

    Non-load devices get factor 1 and consume no draw.
    """
    factors = np.ones(len(specs))
    for d, spec in enumerate(specs):
        if spec.kind in DeviceKind.LOADS:
            factors[d] = np.exp(sigma * rng.standard_normal())
    return factors


def apply_load_factors(specs: Sequence, factors: Sequence[float]) -> List:
    """
    Scale each load's desired consumption.

    Fixed and curtailable loads scale l; deferrable loads scale E and L_max
    together so the window stays feasible.
    """
    out = []
    for spec, factor in zip(specs, factors):
        if factor == 1.0 or spec.kind not in DeviceKind.LOADS:
            out.append(spec)
        elif spec.kind == DeviceKind.DEFERRABLE_LOAD:
            out.append(spec.copy(update={"E": spec.E * factor, "L_max": spec.L_max * factor}))
        else:
            out.append(spec.copy(update={"l": _scaled(spec.l, factor)}))
    return out


def perturb_loads(specs: Sequence, sigma: float, rng: np.random.Generator) -> Tuple[List, np.ndarray]:
    """
    Scale every load profile by an independent lognormal factor.

    Args:
        specs (list): Device specs
        sigma (float): Log-scale standard deviation
        rng (np.random.Generator): Perturbation stream

    Returns:
        tuple: (perturbed specs, applied factor per device)
    """
    factors = draw_load_factors(specs, sigma, rng)
    return apply_load_factors(specs, factors), factors
