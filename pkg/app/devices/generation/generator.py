import math
from dataclasses import dataclass

import numpy as np

from app.devices.base_device import BaseDevice, box_violation, with_infeasible
from app.devices.params import GeneratorParams
from app.kernel.qp import QpProblem
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind


@dataclass(frozen=True)
class GeneratorEnvelope:
    """
    Convex envelope of a switchable generator's per-period cost.

    Linear through the origin on [0, P_c] with the given slope, then the
    quadratic alpha u^2 + beta u + c_fixed on [P_c, P_max]. P_c = 0 means
    there is no linear piece. Equivalently

        slope u + alpha w^2 + kink w,   w = (u - P_c)+
    """
    P_c: float
    slope: float
    alpha: float
    beta: float
    c_fixed: float
    P_max: float

    @property
    def upper_slope(self) -> float:
        """Marginal cost where the quadratic piece starts."""
        return 2 * self.alpha * self.P_c + self.beta

    @property
    def kink(self) -> float:
        """Jump in marginal cost at P_c; zero when the tangent point is interior."""
        return max(self.upper_slope - self.slope, 0.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        quadratic = self.alpha * u ** 2 + self.beta * u + self.c_fixed
        return np.where(u <= self.P_c, self.slope * u, quadratic)


def generator_envelope(params: GeneratorParams) -> GeneratorEnvelope:
    """
    Build the convex envelope of a generator that can be switched off.

    The off state costs nothing at u = 0; on, the cost is
    alpha u^2 + beta u + c_fixed over [P_min, P_max]. The tangent from the
    origin touches the quadratic at sqrt(c_fixed/alpha), clipped to the
    operating range (an unbounded tangent point when alpha = 0 < c_fixed).

    Args:
        params (GeneratorParams): Generator parameters

    Returns:
        GeneratorEnvelope: The per-period relaxed cost
    """
    if params.P_max <= 0:
        raise InvalidParametersError("P_max must be positive")
    alpha, beta, c_fixed = params.alpha, params.beta, params.c_fixed
    if alpha > 0:
        tangent = math.sqrt(c_fixed / alpha)
    else:
        tangent = math.inf if c_fixed > 0 else 0.0
    P_c = min(max(tangent, params.P_min), params.P_max)
    slope = (alpha * P_c ** 2 + beta * P_c + c_fixed) / P_c if P_c > 0 else beta
    return GeneratorEnvelope(P_c=P_c, slope=slope, alpha=alpha, beta=beta, c_fixed=c_fixed, P_max=params.P_max)


class Generator(BaseDevice):
    """
    Generator with output u = -p in [P_min, P_max] and ramp limits on u.

    Switchable generators use the convex envelope over [0, P_max].
    """
    kind = DeviceKind.GENERATOR

    def setup(self):
        params = self.params
        self.relaxed = params.switchable
        self.envelope = generator_envelope(params) if params.switchable else None
        self.u_lo = 0.0 if params.switchable else params.P_min
        self.u_hi = params.P_max
        self.ramps = params.ramp_bounds if self.horizon > 1 else None
        self.diff = np.diff(np.eye(self.horizon), axis=0)

    def cost(self, u):
        """Per-period cost of output u (no bound check)."""
        if self.envelope is not None:
            return self.envelope(u)
        u = np.asarray(u, dtype=float)
        return self.params.alpha * u ** 2 + self.params.beta * u

    def power_bounds(self):
        return np.full(self.shape, -self.u_hi), np.full(self.shape, -self.u_lo)

    def _objective(self, p, tol):
        u = -p[..., 0, :]
        violation = box_violation(u, self.u_lo, self.u_hi)
        if self.ramps is not None:
            violation = np.maximum(violation, box_violation(np.diff(u, axis=-1), *self.ramps))
        return with_infeasible(np.sum(self.cost(u), axis=-1), violation, tol)

    def _prox(self, v, rho):
        target = -v[0]
        u = self._pointwise(target, rho)
        if not self._ramps_hold(u):
            u = self._ramped(target, rho)
        return -u[None, :]

    def _pointwise(self, target, rho):
        alpha, beta = self.params.alpha, self.params.beta
        env = self.envelope
        if env is None or env.P_c == 0:
            return np.clip((rho * target - beta) / (2 * alpha + rho), self.u_lo, self.u_hi)
        linear = target - env.slope / rho
        quadratic = np.clip((rho * target - beta) / (2 * alpha + rho), env.P_c, self.u_hi)
        return np.where(linear <= env.P_c, np.maximum(linear, 0.0), quadratic)

    def _ramps_hold(self, u):
        if self.ramps is None:
            return True
        du = np.diff(u)
        return bool(np.all(du >= self.ramps[0]) and np.all(du <= self.ramps[1]))

    def _ramped(self, target, rho):
        T = self.horizon
        eye = np.eye(T)
        r_min, r_max = self.ramps
        env = self.envelope
        if env is None or env.P_c == 0:
            alpha, beta = self.params.alpha, self.params.beta
        elif env.P_c >= self.u_hi or (env.alpha == 0 and env.kink == 0):
            alpha, beta = 0.0, env.slope
        else:
            alpha = None

        if alpha is not None:
            prob = QpProblem(
                Q=(2 * alpha + rho) * eye,
                q=beta - rho * target,
                A=np.vstack([eye, self.diff]),
                lo=np.concatenate([np.full(T, self.u_lo), np.full(T - 1, r_min)]),
                hi=np.concatenate([np.full(T, self.u_hi), np.full(T - 1, r_max)]),
            )
            return self._solve(prob).x

        # cost slope u + alpha w^2 + kink w with w >= (u - P_c)+ as the excess over P_c
        zero = np.zeros((T, T))
        prob = QpProblem(
            Q=np.block([[rho * eye, zero], [zero, 2 * env.alpha * eye]]),
            q=np.concatenate([env.slope - rho * target, np.full(T, env.kink)]),
            A=np.vstack([np.hstack([eye, zero]), np.hstack([zero, eye]), np.hstack([-eye, eye]),
                         np.hstack([self.diff, np.zeros((T - 1, T))])]),
            lo=np.concatenate([np.full(T, self.u_lo), np.zeros(T), np.full(T, -env.P_c), np.full(T - 1, r_min)]),
            hi=np.concatenate([np.full(T, self.u_hi), np.full(2 * T, np.inf), np.full(T - 1, r_max)]),
        )
        return self._solve(prob).x[:T]
