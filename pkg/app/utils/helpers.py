import time
import zlib
from contextlib import contextmanager
from typing import Dict, Iterable, Tuple

import numpy as np
from scipy import stats


def substream(seed: int, purpose: str) -> np.random.Generator:
    """
    Get a counter-based random generator dedicated to one purpose.

    Each purpose (topology, device mix, parameters, ...) gets its own Philox
    key derived from the seed and a stable hash of the purpose name, so
    adding draws for one purpose never shifts the draws of another.

    Args:
        seed (int): Run seed
        purpose (str): Stream name (from RngStream constants)

    Returns:
        np.random.Generator: Generator for that stream
    """
    sequence = np.random.SeedSequence([int(seed), zlib.crc32(purpose.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(sequence))


def substreams(seed: int, purposes: Iterable[str]) -> Dict[str, np.random.Generator]:
    """Get one generator per purpose."""
    return {purpose: substream(seed, purpose) for purpose in purposes}


def l2_norm(x: np.ndarray) -> float:
    """
    Euclidean norm with a fixed reduction order.

    numpy's pairwise summation over a contiguous buffer always visits
    elements in index order, so the result does not depend on how the
    array was filled.
    """
    flat = np.ascontiguousarray(x, dtype=float).ravel()
    return float(np.sqrt(np.sum(flat * flat)))


def mean_confidence_interval(samples, confidence: float = 0.95) -> Tuple[float, float, float]:
    """
    Mean and Student-t confidence interval of a sample.

    Args:
        samples: Observations
        confidence (float, optional): Confidence level. Defaults to 0.95.

    Returns:
        tuple: (mean, lower, upper); the bounds equal the mean for a single sample
    """
    data = np.asarray(samples, dtype=float)
    mean = float(np.mean(data))
    if data.size < 2:
        return mean, mean, mean
    half_width = float(stats.sem(data) * stats.t.ppf(0.5 + confidence / 2.0, data.size - 1))
    return mean, mean - half_width, mean + half_width


@contextmanager
def stopwatch():
    """Measure wall time of a block; yields a dict filled with 'elapsed' on exit."""
    timing = {"elapsed": 0.0}
    start = time.perf_counter()
    try:
        yield timing
    finally:
        timing["elapsed"] = time.perf_counter() - start
