import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.devices.params import as_profile
from app.kernel.qp import QpProblem
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind


class ThermalLoad(BaseDevice):
    """
    Cooling load on a heat store whose temperature follows

        theta(tau+1) = theta(tau) + (mu/c)(theta_amb(tau) - theta(tau)) - (eta/c) p(tau),
        theta(1) = theta_init,

    kept within [theta_min, theta_max], with 0 <= p <= H_max. Zero cost.
    The dynamics are substituted out: theta = theta_free + M p.
    """
    kind = DeviceKind.THERMAL_LOAD

    def setup(self):
        params = self.params
        T = self.horizon
        self.theta_min = as_profile(params.theta_min, T, "theta_min")
        self.theta_max = as_profile(params.theta_max, T, "theta_max")
        ambient = as_profile(params.theta_amb, T, "theta_amb")
        self.power_max = as_profile(params.H_max, T, "H_max")
        if not self.theta_min[0] <= params.theta_init <= self.theta_max[0]:
            raise InvalidParametersError("theta_init is outside the first period's temperature limits")

        decay = 1.0 - params.mu / params.c
        free = np.empty(T)
        free[0] = params.theta_init
        for k in range(1, T):
            free[k] = decay * free[k - 1] + (params.mu / params.c) * ambient[k - 1]
        self.theta_free = free

        k = np.arange(T)[:, None]
        j = np.arange(T)[None, :]
        lag = np.maximum(k - 1 - j, 0)
        self.response = np.where(j < k, -(params.eta / params.c) * decay ** lag, 0.0)

    def temperature(self, p: np.ndarray) -> np.ndarray:
        """Temperature trajectory for schedule rows (..., 1, T)."""
        return self.theta_free + p[..., 0, :] @ self.response.T

    def power_bounds(self):
        return np.zeros(self.shape), self.power_max[None, :].copy()

    def _objective(self, p, tol):
        x = p[..., 0, :]
        violation = np.maximum(
            box_violation(x, 0.0, self.power_max),
            box_violation(self.temperature(p), self.theta_min, self.theta_max),
        )
        return with_infeasible(np.zeros(x.shape[:-1]), violation, tol)

    def _prox(self, v, rho):
        clipped = np.clip(v[0], 0.0, self.power_max)
        theta = self.theta_free + self.response @ clipped
        if np.all(theta >= self.theta_min) and np.all(theta <= self.theta_max):
            return clipped[None, :]

        T = self.horizon
        prob = QpProblem(
            Q=np.eye(T),
            q=-v[0],
            A=np.vstack([np.eye(T), self.response[1:]]),
            lo=np.concatenate([np.zeros(T), self.theta_min[1:] - self.theta_free[1:]]),
            hi=np.concatenate([self.power_max, self.theta_max[1:] - self.theta_free[1:]]),
        )
        return self._solve(prob).x[None, :]
