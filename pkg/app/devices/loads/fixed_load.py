import numpy as np

from app.devices.base_device import BaseDevice, with_infeasible
from app.devices.params import as_profile
from config.constants import DeviceKind


class FixedLoad(BaseDevice):
    """Load that must consume exactly its profile l. Zero cost."""
    kind = DeviceKind.FIXED_LOAD

    def setup(self):
        self.load = as_profile(self.params.l, self.horizon, "l")

    def power_bounds(self):
        return self.load[None, :].copy(), self.load[None, :].copy()

    def _objective(self, p, tol):
        deviation = np.max(np.abs(p[..., 0, :] - self.load), axis=-1)
        return with_infeasible(np.zeros(deviation.shape), deviation, tol)

    def _prox(self, v, rho):
        return self.load[None, :].copy()
