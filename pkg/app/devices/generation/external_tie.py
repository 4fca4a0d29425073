import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.devices.params import as_profile
from config.constants import DeviceKind


class ExternalTie(BaseDevice):
    """
    Connection to an outside market: buys at c + gamma, sells at c - gamma,
    |p| <= E_max. Cost is -c'p + gamma'|p|.
    """
    kind = DeviceKind.EXTERNAL_TIE

    def setup(self):
        T = self.horizon
        self.limit = as_profile(self.params.E_max, T, "E_max")
        self.price = as_profile(self.params.c, T, "c")
        self.spread = as_profile(self.params.gamma, T, "gamma")

    def power_bounds(self):
        return -self.limit[None, :].copy(), self.limit[None, :].copy()

    def _objective(self, p, tol):
        x = p[..., 0, :]
        cost = np.sum(-self.price * x + self.spread * np.abs(x), axis=-1)
        return with_infeasible(cost, box_violation(x, -self.limit, self.limit), tol)

    def _prox(self, v, rho):
        shifted = v[0] + self.price / rho
        soft = np.sign(shifted) * np.maximum(np.abs(shifted) - self.spread / rho, 0.0)
        return np.clip(soft, -self.limit, self.limit)[None, :]
