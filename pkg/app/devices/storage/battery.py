import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.devices.params import as_profile
from app.kernel.qp import QpProblem
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind


class Battery(BaseDevice):
    """
    Storage with charge q(tau) = q_init + sum_{t <= tau} p(t) kept in
    [0, Q_max] and rate limits -D_max <= p <= C_max. Zero cost.

    Optionally the final charge is pinned to q_final, or to q_init when
    the battery is cyclic.
    """
    kind = DeviceKind.BATTERY

    def setup(self):
        params = self.params
        T = self.horizon
        self.charge_rate = as_profile(params.C_max, T, "C_max")
        self.discharge_rate = as_profile(params.D_max, T, "D_max")
        self.cumulative = np.tril(np.ones((T, T)))
        self.target = params.final_target

        if self.target is not None:
            reach_up = params.q_init + float(np.sum(self.charge_rate))
            reach_down = params.q_init - float(np.sum(self.discharge_rate))
            if not reach_down <= self.target <= reach_up:
                raise InvalidParametersError(
                    f"final charge {self.target} is unreachable from q_init={params.q_init}"
                )

    def charge(self, p: np.ndarray) -> np.ndarray:
        """Charge trajectory q for schedule rows (..., 1, T)."""
        return self.params.q_init + np.cumsum(p[..., 0, :], axis=-1)

    def power_bounds(self):
        return -self.discharge_rate[None, :].copy(), self.charge_rate[None, :].copy()

    def _objective(self, p, tol):
        x = p[..., 0, :]
        q = self.charge(p)
        violation = np.maximum(
            box_violation(x, -self.discharge_rate, self.charge_rate),
            box_violation(q, 0.0, self.params.Q_max),
        )
        if self.target is not None:
            violation = np.maximum(violation, np.abs(q[..., -1] - self.target))
        return with_infeasible(np.zeros(x.shape[:-1]), violation, tol)

    def _prox(self, v, rho):
        params = self.params
        T = self.horizon
        clipped = np.clip(v[0], -self.discharge_rate, self.charge_rate)
        q = params.q_init + np.cumsum(clipped)
        if self.target is None and np.all(q >= 0.0) and np.all(q <= params.Q_max):
            return clipped[None, :]

        lo = np.concatenate([-self.discharge_rate, np.full(T, -params.q_init)])
        hi = np.concatenate([self.charge_rate, np.full(T, params.Q_max - params.q_init)])
        if self.target is not None:
            lo[-1] = hi[-1] = self.target - params.q_init
        prob = QpProblem(Q=np.eye(T), q=-v[0], A=np.vstack([np.eye(T), self.cumulative]), lo=lo, hi=hi)
        return self._solve(prob).x[None, :]
