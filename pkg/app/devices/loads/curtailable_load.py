import numpy as np

from app.devices.base_device import BaseDevice
from app.devices.params import as_profile
from config.constants import DeviceKind


class CurtailableLoad(BaseDevice):
    """Load with no hard limits; shortfall below l costs alpha per unit."""
    kind = DeviceKind.CURTAILABLE_LOAD

    def setup(self):
        self.load = as_profile(self.params.l, self.horizon, "l")

    def _objective(self, p, tol):
        shortfall = np.maximum(self.load - p[..., 0, :], 0.0)
        return self.params.alpha * np.sum(shortfall, axis=-1)

    def _prox(self, v, rho):
        return np.maximum(v[0], np.minimum(self.load, v[0] + self.params.alpha / rho))[None, :]
