import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.devices.params import as_profile
from app.kernel.qp import QpProblem
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind


class ElectricVehicle(BaseDevice):
    """
    Electric vehicle plugged in over periods A..D (1-indexed, inclusive).

    Charges at 0 <= p <= C_max inside the window and draws nothing outside
    it. The charge q(tau) = q_init + sum_{t=A}^{tau} p(t) is penalized by
    alpha * sum (c_des - q)_+ over the window.
    """
    kind = DeviceKind.ELECTRIC_VEHICLE

    def setup(self):
        params = self.params
        T = self.horizon
        if params.D > T:
            raise InvalidParametersError(f"window end {params.D} is beyond the horizon {T}")
        self.window = slice(params.A - 1, params.D)
        self.rate = as_profile(params.C_max, T, "C_max")
        self.desired = as_profile(params.c_des, T, "c_des")
        n = params.D - params.A + 1
        self.cumulative = np.tril(np.ones((n, n)))

    def charge(self, p: np.ndarray) -> np.ndarray:
        """Charge over the window for schedule rows (..., 1, T)."""
        return self.params.q_init + np.cumsum(p[..., 0, self.window], axis=-1)

    def power_bounds(self):
        hi = np.zeros(self.shape)
        hi[0, self.window] = self.rate[self.window]
        return np.zeros(self.shape), hi

    def _objective(self, p, tol):
        x = p[..., 0, :]
        upper = np.zeros(self.horizon)
        upper[self.window] = self.rate[self.window]
        shortfall = np.maximum(self.desired[self.window] - self.charge(p), 0.0)
        cost = self.params.alpha * np.sum(shortfall, axis=-1)
        return with_infeasible(cost, box_violation(x, 0.0, upper), tol)

    def _prox(self, v, rho):
        params = self.params
        v_w = v[0, self.window]
        rate = self.rate[self.window]
        need = self.desired[self.window] - params.q_init
        n = v_w.size
        out = np.zeros(self.shape)

        clipped = np.clip(v_w, 0.0, rate)
        if np.all(self.cumulative @ clipped >= need):
            out[0, self.window] = clipped
            return out

        # Variables [p_w, w]; w >= 0 and w >= need - cumsum(p_w) is the shortfall.
        eye = np.eye(n)
        zero = np.zeros((n, n))
        prob = QpProblem(
            Q=np.block([[eye, zero], [zero, zero]]),
            q=np.concatenate([-v_w, np.full(n, params.alpha / rho)]),
            A=np.vstack([np.hstack([eye, zero]), np.hstack([zero, eye]), np.hstack([self.cumulative, eye])]),
            lo=np.concatenate([np.zeros(2 * n), need]),
            hi=np.concatenate([rate, np.full(2 * n, np.inf)]),
        )
        out[0, self.window] = self._solve(prob).x[:n]
        return out
