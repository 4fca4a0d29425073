"""
Centralized reference solve.

The whole scheduling problem is written as one sparse QP over every
terminal schedule plus auxiliary variables (charge levels, temperatures,
shortfalls) and solved with the interior point kernel. Net balance rows
sum_{t in n} p_t = 0 are equality constraints whose multipliers are the net
duals.

Lossy lines are not QP-representable; their loss arc is replaced by
supporting halfspaces (tangents of the convex loss curve) that are refined
until no period violates the curve by more than CUT_TOLERANCE.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
from loguru import logger
from scipy import sparse

from app.devices.base_device import BaseDevice
from app.devices.generation.generator import generator_envelope
from app.devices.params import as_profile
from app.kernel.projections import loss_curve
from app.kernel.qp import QpProblem, solve_qp
from app.network.model import Network, validate
from app.utils.exceptions import DimensionMismatchError, NetworkValidationError, OracleBudgetError
from config.config import current_config
from config.constants import DeviceKind, QpStatus

CUT_TOLERANCE = 1e-6
MAX_CUT_ROUNDS = 50
INITIAL_CUTS = (-1.0, -0.5, 0.0, 0.5, 1.0)
QP_MAX_ITER = 200


@dataclass
class CentralizedResult:
    p: np.ndarray
    objective: float
    net_duals: np.ndarray
    prices: np.ndarray
    status: str
    cut_rounds: int = 0
    kkt_residual: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == QpStatus.OPTIMAL


def loss_slope(d, g: float, b: float):
    """Derivative of the loss curve s(d)."""
    d = np.asarray(d, dtype=float)
    return g * (d / b ** 2) / np.sqrt(np.maximum(4.0 - (d / b) ** 2, 1e-300))


class QpBuilder:
    """Accumulates a sparse QP one block of variables and rows at a time."""

    def __init__(self, n: int):
        self.n = n
        self.quad: Dict[int, float] = {}
        self.linear: Dict[int, float] = {}
        self.rows: List[int] = []
        self.cols: List[int] = []
        self.vals: List[float] = []
        self.lo: List[float] = []
        self.hi: List[float] = []

    @property
    def m(self) -> int:
        return len(self.lo)

    def add_vars(self, k: int) -> np.ndarray:
        idx = np.arange(self.n, self.n + k)
        self.n += k
        return idx

    def add_cost(self, idx, quadratic=0.0, linear=0.0):
        """Add quadratic * x^2 + linear * x for each index."""
        quadratic = np.broadcast_to(np.asarray(quadratic, dtype=float), np.shape(idx))
        linear = np.broadcast_to(np.asarray(linear, dtype=float), np.shape(idx))
        for i, a, c in zip(np.ravel(idx), quadratic.ravel(), linear.ravel()):
            if a:
                self.quad[int(i)] = self.quad.get(int(i), 0.0) + 2.0 * a
            if c:
                self.linear[int(i)] = self.linear.get(int(i), 0.0) + c

    def add_rows(self, cols, vals, lo, hi):
        """
        Add len(lo) rows; cols and vals have shape (rows, k) with row r
        reading sum_j vals[r, j] * x[cols[r, j]].
        """
        cols = np.atleast_2d(np.asarray(cols))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (cols.shape[0],))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (cols.shape[0],))
        first = self.m
        for r in range(cols.shape[0]):
            self.rows.extend([first + r] * cols.shape[1])
        self.cols.extend(cols.ravel().tolist())
        self.vals.extend(vals.ravel().tolist())
        self.lo.extend(lo.tolist())
        self.hi.extend(hi.tolist())
        return np.arange(first, self.m)

    def bound(self, idx, lo, hi):
        idx = np.ravel(idx)
        return self.add_rows(idx[:, None], 1.0, np.broadcast_to(lo, idx.shape), np.broadcast_to(hi, idx.shape))

    def problem(self) -> QpProblem:
        diag = np.zeros(self.n)
        for i, a in self.quad.items():
            diag[i] = a
        q = np.zeros(self.n)
        for i, c in self.linear.items():
            q[i] = c
        A = sparse.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.m, self.n))
        return QpProblem(Q=sparse.diags(diag, format="csr"), q=q, A=A, lo=np.array(self.lo), hi=np.array(self.hi))


def _add_running_sum(builder: QpBuilder, p_idx, start: float, coef: float = 1.0) -> np.ndarray:
    """Variables q with q(0) = start + coef p(0), q(k) = q(k-1) + coef p(k)."""
    n = len(p_idx)
    q = builder.add_vars(n)
    builder.add_rows([[q[0], p_idx[0]]], [1.0, -coef], start, start)
    if n > 1:
        cols = np.stack([q[1:], q[:-1], p_idx[1:]], axis=1)
        builder.add_rows(cols, [1.0, -1.0, -coef], 0.0, 0.0)
    return q


def _add_ramps(builder: QpBuilder, u_cols: List[np.ndarray], ramps):
    """Rows u(k+1) - u(k) in [R_min, R_max] for u = sum of the given columns."""
    if ramps is None or len(u_cols[0]) < 2:
        return
    r_min, r_max = ramps
    cols = np.concatenate([np.stack([c[1:], c[:-1]], axis=1) for c in u_cols], axis=1)
    vals = np.tile([1.0, -1.0], len(u_cols))
    builder.add_rows(cols, vals, r_min, r_max)


def _generator(builder, rows, params, T):
    # u = -p is generated power
    p = rows[0]
    u = builder.add_vars(T)
    builder.add_rows(np.stack([u, p], axis=1), [1.0, 1.0], 0.0, 0.0)
    ramps = params.ramp_bounds if T > 1 else None
    if not params.switchable:
        builder.bound(u, params.P_min, params.P_max)
        builder.add_cost(u, quadratic=params.alpha, linear=params.beta)
        _add_ramps(builder, [u], ramps)
        return
    env = generator_envelope(params)
    builder.bound(u, 0.0, params.P_max)
    builder.add_cost(u, linear=env.slope)
    if env.P_c < params.P_max and (env.alpha > 0 or env.kink > 0):
        # excess w >= (u - P_c)+ carries alpha w^2 + kink w
        excess = builder.add_vars(T)
        builder.bound(excess, 0.0, np.inf)
        builder.add_rows(np.stack([excess, u], axis=1), [1.0, -1.0], -env.P_c, np.inf)
        builder.add_cost(excess, quadratic=env.alpha, linear=env.kink)
    _add_ramps(builder, [u], ramps)


def _line(builder, rows, params, T, cuts):
    p1, p2 = rows
    pair = np.stack([p1, p2], axis=1)
    if params.lossless:
        builder.add_rows(pair, [1.0, 1.0], 0.0, 0.0)
        if params.quad_cost:
            builder.add_cost(np.concatenate([p1, p2]), quadratic=params.quad_cost)
    else:
        g, b = params.g, params.b
        builder.add_rows(pair, [1.0, 1.0], -np.inf, float(loss_curve(params.C_max, g, b)))
        for tau, deltas in enumerate(cuts):
            for delta in deltas:
                slope = float(loss_slope(delta, g, b))
                # s - s'(delta) d >= s(delta) - s'(delta) delta
                builder.add_rows(
                    [[p1[tau], p2[tau]]], [1.0 - slope, 1.0 + slope],
                    float(loss_curve(delta, g, b)) - slope * delta, np.inf,
                )
    if params.C_max is not None:
        builder.add_rows(pair, [1.0, -1.0], -params.C_max, params.C_max)


def _battery(builder, rows, params, T):
    p = rows[0]
    builder.bound(p, -as_profile(params.D_max, T), as_profile(params.C_max, T))
    q = _add_running_sum(builder, p, params.q_init)
    builder.bound(q, 0.0, params.Q_max)
    if params.final_target is not None:
        builder.bound(q[-1:], params.final_target, params.final_target)


def _fixed_load(builder, rows, params, T):
    load = as_profile(params.l, T)
    builder.bound(rows[0], load, load)


def _thermal_load(builder, rows, params, T):
    p = rows[0]
    builder.bound(p, 0.0, as_profile(params.H_max, T))
    theta = builder.add_vars(T)
    ambient = as_profile(params.theta_amb, T)
    builder.bound(theta[:1], params.theta_init, params.theta_init)
    if T > 1:
        decay = 1.0 - params.mu / params.c
        rhs = (params.mu / params.c) * ambient[:-1]
        cols = np.stack([theta[1:], theta[:-1], p[:-1]], axis=1)
        builder.add_rows(cols, [1.0, -decay, params.eta / params.c], rhs, rhs)
    builder.bound(theta, as_profile(params.theta_min, T), as_profile(params.theta_max, T))


def _deferrable_load(builder, rows, params, T):
    p = rows[0]
    inside = np.zeros(T, dtype=bool)
    inside[params.A - 1:params.D] = True
    builder.bound(p, 0.0, np.where(inside, params.L_max, 0.0))
    builder.add_rows(p[inside][None, :], 1.0, params.E, np.inf)


def _curtailable_load(builder, rows, params, T):
    p = rows[0]
    shortfall = builder.add_vars(T)
    builder.bound(shortfall, 0.0, np.inf)
    builder.add_rows(np.stack([shortfall, p], axis=1), [1.0, 1.0], as_profile(params.l, T), np.inf)
    builder.add_cost(shortfall, linear=params.alpha)


def _electric_vehicle(builder, rows, params, T):
    p = rows[0]
    window = slice(params.A - 1, params.D)
    upper = np.zeros(T)
    upper[window] = as_profile(params.C_max, T)[window]
    builder.bound(p, 0.0, upper)
    charge = _add_running_sum(builder, p[window], params.q_init)
    shortfall = builder.add_vars(charge.size)
    builder.bound(shortfall, 0.0, np.inf)
    desired = as_profile(params.c_des, T)[window]
    builder.add_rows(np.stack([shortfall, charge], axis=1), [1.0, 1.0], desired, np.inf)
    builder.add_cost(shortfall, linear=params.alpha)


def _external_tie(builder, rows, params, T):
    # p = buy - sell with cost -c p + gamma (buy + sell)
    p = rows[0]
    limit = as_profile(params.E_max, T)
    price = as_profile(params.c, T)
    spread = as_profile(params.gamma, T)
    builder.bound(p, -limit, limit)
    buy, sell = builder.add_vars(T), builder.add_vars(T)
    builder.bound(np.concatenate([buy, sell]), 0.0, np.inf)
    builder.add_rows(np.stack([p, buy, sell], axis=1), [1.0, -1.0, 1.0], 0.0, 0.0)
    builder.add_cost(buy, linear=spread - price)
    builder.add_cost(sell, linear=spread + price)


FORMULATIONS = {
    DeviceKind.GENERATOR: _generator,
    DeviceKind.BATTERY: _battery,
    DeviceKind.FIXED_LOAD: _fixed_load,
    DeviceKind.THERMAL_LOAD: _thermal_load,
    DeviceKind.DEFERRABLE_LOAD: _deferrable_load,
    DeviceKind.CURTAILABLE_LOAD: _curtailable_load,
    DeviceKind.ELECTRIC_VEHICLE: _electric_vehicle,
    DeviceKind.EXTERNAL_TIE: _external_tie,
}


def _assemble(network: Network, params: Sequence, cuts: Dict[int, List[List[float]]]):
    T = network.horizon
    builder = QpBuilder(network.n_terminals * T)
    terminal_cols = np.arange(network.n_terminals * T).reshape(network.n_terminals, T)

    for d, spec in enumerate(params):
        rows = [terminal_cols[t] for t in network.device_index[d]]
        if spec.kind == DeviceKind.TRANSMISSION_LINE:
            _line(builder, rows, spec, T, cuts.get(d, []))
        else:
            FORMULATIONS[spec.kind](builder, rows, spec, T)

    balance = []
    for terminals in network.net_index:
        cols = terminal_cols[list(terminals)].T
        balance.append(builder.add_rows(cols, 1.0, 0.0, 0.0))
    return builder, np.stack(balance)


def centralized_solve(network: Network, specs: Sequence, tol: float = None,
                      max_variables: int = None) -> CentralizedResult:
    """
    Solve the relaxed scheduling problem as one QP.

    Args:
        network (Network): The network
        specs (list): DeviceSpec (or device) per device id
        tol (float, optional): QP tolerance. Defaults to CENTRALIZED_QP_TOL.
        max_variables (int, optional): Size cap. Defaults to CENTRALIZED_MAX_VARIABLES.

    Returns:
        CentralizedResult: Schedules, objective, net duals, prices and QP status
    """
    tol = current_config.CENTRALIZED_QP_TOL if tol is None else tol
    max_variables = current_config.CENTRALIZED_MAX_VARIABLES if max_variables is None else max_variables
    report = validate(network)
    if not report.ok:
        raise NetworkValidationError(report)
    if len(specs) != network.n_devices:
        raise DimensionMismatchError(f"{len(specs)} specs for {network.n_devices} devices")
    params = [spec.params if isinstance(spec, BaseDevice) else spec for spec in specs]

    T = network.horizon
    lossy = [
        d for d, spec in enumerate(params)
        if spec.kind == DeviceKind.TRANSMISSION_LINE and not spec.lossless
    ]
    cuts = {d: [[f * params[d].C_max for f in INITIAL_CUTS] for _ in range(T)] for d in lossy}

    rounds = 0
    while True:
        builder, balance = _assemble(network, params, cuts)
        if builder.n > max_variables:
            raise OracleBudgetError(
                f"centralized QP needs {builder.n} variables, cap is {max_variables}"
            )
        prob = builder.problem()
        result = solve_qp(prob, tol=tol, max_iter=QP_MAX_ITER)
        if result.status == QpStatus.PRIMAL_INFEASIBLE:
            logger.warning("Centralized QP is infeasible")
            nan = np.full((network.n_nets, T), np.nan)
            return CentralizedResult(
                p=np.full(network.shape, np.nan), objective=float("inf"), net_duals=nan,
                prices=nan.copy(), status=result.status, cut_rounds=rounds, kkt_residual=result.kkt_residual,
            )

        p = result.x[:network.n_terminals * T].reshape(network.shape)
        added = 0
        for d in lossy:
            first, second = network.device_index[d]
            diff = p[first] - p[second]
            gap = loss_curve(diff, params[d].g, params[d].b) - (p[first] + p[second])
            for tau in np.flatnonzero(gap > CUT_TOLERANCE):
                cuts[d][tau].append(float(np.clip(diff[tau], -params[d].C_max, params[d].C_max)))
                added += 1
        if added == 0 or rounds >= MAX_CUT_ROUNDS:
            break
        rounds += 1
        logger.debug(f"Cut round {rounds}: added {added} loss tangents")

    if added:
        logger.warning(f"Loss cuts still violated after {MAX_CUT_ROUNDS} rounds")
    net_duals = result.duals[balance]
    logger.info(
        f"Centralized solve: {result.status}, {prob.n} variables, {prob.m} rows, "
        f"{rounds} cut rounds, objective {result.objective(prob):.8g}"
    )
    return CentralizedResult(
        p=p,
        objective=result.objective(prob),
        net_duals=net_duals,
        prices=net_duals / network.net_sizes[:, None],
        status=result.status,
        cut_rounds=rounds,
        kkt_residual=result.kkt_residual,
    )
