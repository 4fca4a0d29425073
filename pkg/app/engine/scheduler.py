import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

import numpy as np
from loguru import logger

from app.network.model import Network
from app.utils.exceptions import ProxError


class DevicePhase:
    """
    Runs the device half of an iteration: every device evaluates its prox
    on its own rows of the schedule matrix.

    Devices are dealt round-robin to `threads` workers. Workers read the
    shared input matrix and write disjoint rows of the output, so the phase
    needs no locking; the caller's wait on all futures is the barrier.
    """

    def __init__(self, network: Network, devices: Sequence, threads: int = 1):
        """
        Initialize the phase runner.

        Args:
            network (Network): The network
            devices (list): Device objects, devices[d] for device id d
            threads (int, optional): Worker count. Defaults to 1.
        """
        self.network = network
        self.devices = list(devices)
        self.threads = max(1, int(threads))
        ids = np.arange(len(self.devices))
        self.batches: List[np.ndarray] = [ids[i::self.threads] for i in range(self.threads)]
        self.executor = None
        if self.threads > 1:
            self.executor = ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="prox")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def close(self):
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    def run(self, v: np.ndarray, rho: float, out: np.ndarray) -> float:
        """
        Write prox_d(v_d) into the rows of every device.

        Args:
            v (np.ndarray): Prox arguments, schedule matrix
            rho (float): Penalty parameter
            out (np.ndarray): Output schedule matrix, written in place

        Returns:
            float: Longest single-device prox time in seconds
        """
        if self.executor is None:
            longest = self._run_batch(self.batches[0], v, rho, out)
        else:
            futures = [self.executor.submit(self._run_batch, batch, v, rho, out) for batch in self.batches]
            # Collect every result before raising so no worker is still writing
            outcomes = []
            for future in futures:
                try:
                    outcomes.append(future.result())
                except ProxError as e:
                    outcomes.append(e)
            failures = [o for o in outcomes if isinstance(o, ProxError)]
            if failures:
                raise min(failures, key=lambda e: e.device_id)
            longest = max(outcomes) if outcomes else 0.0

        return longest

    def _run_batch(self, device_ids, v, rho, out) -> float:
        longest = 0.0
        index = self.network.device_index
        for d in device_ids:
            rows = index[d]
            start = time.perf_counter()
            try:
                out[rows] = self.devices[d].prox(v[rows], rho)
            except Exception as e:
                logger.error(f"Prox failed on device {d} ({self.devices[d].kind}): {str(e)}")
                raise ProxError(int(d), e) from e
            longest = max(longest, time.perf_counter() - start)
        return longest
