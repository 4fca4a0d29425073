import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.kernel.projections import project_box_halfspace
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind


class DeferrableLoad(BaseDevice):
    """
    Load that must consume at least E over periods A..D (1-indexed,
    inclusive) at 0 <= p <= L_max, and nothing outside the window.
    Relaxed: the on/off variant is never enforced.
    """
    kind = DeviceKind.DEFERRABLE_LOAD
    relaxed = True

    def setup(self):
        params = self.params
        if params.D > self.horizon:
            raise InvalidParametersError(f"window end {params.D} is beyond the horizon {self.horizon}")
        self.window = slice(params.A - 1, params.D)
        self.upper = np.zeros(self.horizon)
        self.upper[self.window] = params.L_max

    def power_bounds(self):
        return np.zeros(self.shape), self.upper[None, :].copy()

    def _objective(self, p, tol):
        x = p[..., 0, :]
        shortfall = self.params.E - np.sum(x[..., self.window], axis=-1)
        violation = np.maximum(box_violation(x, 0.0, self.upper), shortfall)
        return with_infeasible(np.zeros(shortfall.shape), violation, tol)

    def _prox(self, v, rho):
        out = np.zeros(self.shape)
        v_w = v[0, self.window]
        out[0, self.window] = project_box_halfspace(
            v_w, np.zeros(v_w.size), self.upper[self.window], self.params.E
        )
        return out
