"""
Primal-dual interior point solver for small convex QPs.

    minimize    1/2 x'Qx + q'x
    subject to  lo <= Ax <= hi

Rows with lo == hi become equality constraints, the remaining finite bounds
become inequalities Gx + s = h with s >= 0. Each iteration takes a Mehrotra
predictor-corrector step on the reduced KKT system

    [Q + G'DG + delta I   E'        ] [dx]
    [E                   -delta I   ] [dy]

with D = Z/S, capped at D_MAX. Dense matrices use a dense Cholesky or LU
factorization; scipy sparse matrices go through a sparse LU so the
centralized oracle can reuse the same kernel. If the system cannot be
solved even at the largest delta, the solver stops and reports its best
iterate.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from loguru import logger
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from app.utils.exceptions import KktBreakdownError, QpError
from config.config import current_config
from config.constants import QpStatus

REGULARIZATION_LADDER = (1e-10, 1e-8, 1e-6, 1e-4)
REFINEMENT_STEPS = 3
D_MAX = 1e16
PSD_SHIFT = 1e-10
STEP_FRACTION = 0.99
INFEASIBILITY_SCALE = 1e8


@dataclass
class QpProblem:
    """A convex QP; A, lo and hi may be omitted for an unconstrained problem."""
    Q: object
    q: np.ndarray
    A: Optional[object] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).ravel()
        n = self.q.size
        if sparse.issparse(self.Q):
            self.Q = sparse.csr_matrix(self.Q, dtype=float)
        else:
            self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.shape != (n, n):
            raise QpError(f"Q has shape {self.Q.shape}, expected {(n, n)}")

        if self.A is None:
            self.A = sparse.csr_matrix((0, n)) if self.is_sparse else np.zeros((0, n))
        elif self.is_sparse:
            self.A = sparse.csr_matrix(self.A, dtype=float)
        elif sparse.issparse(self.A):
            self.A = self.A.toarray().astype(float)
        else:
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        m = self.A.shape[0]
        if self.A.shape[1] != n:
            raise QpError(f"A has {self.A.shape[1]} columns, expected {n}")

        self.lo = np.full(m, -np.inf) if self.lo is None else np.asarray(self.lo, dtype=float).ravel()
        self.hi = np.full(m, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).ravel()
        if self.lo.shape != (m,) or self.hi.shape != (m,):
            raise QpError(f"bounds must have length {m}")
        if np.any(self.lo > self.hi):
            raise QpError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.Q)


@dataclass
class QpResult:
    """
    Solver output.

    duals are per constraint row and satisfy Qx + q + A'duals = 0 at optimality
    (positive on active upper bounds, negative on active lower bounds).
    """
    x: np.ndarray
    duals: np.ndarray
    kkt_residual: float
    iterations: int
    status: str

    @property
    def converged(self) -> bool:
        return self.status == QpStatus.OPTIMAL

    def objective(self, prob: QpProblem) -> float:
        return float(0.5 * self.x @ (prob.Q @ self.x) + prob.q @ self.x)


def check_psd(Q) -> None:
    """Raise QpError unless Q is symmetric positive semidefinite."""
    if sparse.issparse(Q):
        asymmetry = abs(Q - Q.T).max() if Q.nnz else 0.0
        if asymmetry > 1e-12 or np.any(Q.diagonal() < -PSD_SHIFT):
            raise QpError("Q is not symmetric positive semidefinite")
        return
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12):
        raise QpError("Q is not symmetric")
    try:
        scipy.linalg.cholesky(Q + PSD_SHIFT * np.eye(Q.shape[0]), lower=True)
    except np.linalg.LinAlgError:
        raise QpError("Q is not positive semidefinite")


def _split_rows(prob: QpProblem):
    finite_lo = np.isfinite(prob.lo)
    finite_hi = np.isfinite(prob.hi)
    eq = np.flatnonzero(finite_lo & finite_hi & (prob.lo == prob.hi))
    upper = np.flatnonzero(finite_hi & ~(finite_lo & (prob.lo == prob.hi)))
    lower = np.flatnonzero(finite_lo & ~(finite_hi & (prob.lo == prob.hi)))

    A = prob.A
    E = A[eq]
    if prob.is_sparse:
        G = sparse.vstack([A[upper], -A[lower]], format="csr")
    else:
        G = np.vstack([A[upper], -A[lower]])
    h = np.concatenate([prob.hi[upper], -prob.lo[lower]])
    return eq, upper, lower, E, prob.hi[eq], G, h


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    shrinking = dv < 0
    if not np.any(shrinking):
        return np.inf
    return float(np.min(-v[shrinking] / dv[shrinking]))


def _inf_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _kkt_matrix(Q, G, E, d: np.ndarray):
    """Reduced KKT matrix without regularization."""
    me = E.shape[0]
    if sparse.issparse(Q):
        H = (Q + G.T @ sparse.diags(d) @ G if G.shape[0] else Q).tocsc()
        return sparse.bmat([[H, E.T], [E, None]], format="csc") if me else H
    H = Q + G.T @ (d[:, None] * G)
    return np.block([[H, E.T], [E, np.zeros((me, me))]]) if me else H


class KktSolver:
    """
    Solves the reduced KKT system for one interior point iteration.

    The matrix is factorized with a primal shift +delta and a dual shift
    -delta; each solve is polished by iterative refinement against the
    unshifted matrix. A factorization that fails or a solve that comes back
    non-finite moves delta one rung up REGULARIZATION_LADDER.
    """

    def __init__(self, Q, G, E, d: np.ndarray):
        self.n = Q.shape[0]
        self.me = E.shape[0]
        self.K = _kkt_matrix(Q, G, E, d)
        self.level = 0
        self._solve = None

    @property
    def regularization(self) -> float:
        return REGULARIZATION_LADDER[self.level]

    def _shifted(self):
        delta = self.regularization
        shift = np.concatenate([np.full(self.n, delta), np.full(self.me, -delta)])
        if sparse.issparse(self.K):
            return (self.K + sparse.diags(shift)).tocsc()
        return self.K + np.diag(shift)

    def _factorize(self):
        K = self._shifted()
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            if sparse.issparse(K):
                return sparse_linalg.splu(K).solve
            if self.me == 0:
                try:
                    factor = scipy.linalg.cho_factor(K, lower=True)
                    return lambda rhs: scipy.linalg.cho_solve(factor, rhs)
                except np.linalg.LinAlgError:
                    pass
            factor = scipy.linalg.lu_factor(K)
            return lambda rhs: scipy.linalg.lu_solve(factor, rhs)

    def _refined(self, rhs: np.ndarray) -> np.ndarray:
        sol = self._solve(rhs)
        if not np.all(np.isfinite(sol)):
            return None
        error = _inf_norm(rhs - self.K @ sol)
        for _ in range(REFINEMENT_STEPS):
            if error <= 1e-14 * (1.0 + _inf_norm(rhs)):
                break
            step = self._solve(rhs - self.K @ sol)
            candidate = sol + step
            candidate_error = _inf_norm(rhs - self.K @ candidate) if np.all(np.isfinite(candidate)) else np.inf
            if not candidate_error < error:
                break
            sol, error = candidate, candidate_error
        return sol

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        while self.level < len(REGULARIZATION_LADDER):
            if self._solve is None:
                try:
                    self._solve = self._factorize()
                except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, RuntimeError, ValueError):
                    self.level += 1
                    continue
            with np.errstate(over="ignore", invalid="ignore"):
                sol = self._refined(rhs)
            if sol is not None:
                return sol
            self._solve = None
            self.level += 1
        raise KktBreakdownError(f"KKT system could not be solved up to regularization {REGULARIZATION_LADDER[-1]:g}")


def solve_qp(prob: QpProblem, tol: float = None, max_iter: int = None,
             x0: Optional[np.ndarray] = None) -> QpResult:
    """
    Solve a convex QP with Mehrotra's predictor-corrector method.

    Args:
        prob (QpProblem): Problem data
        tol (float, optional): Bound on the infinity norm of the stationarity,
            primal and complementarity residuals. Defaults to KKT_TOL.
        max_iter (int, optional): Iteration limit. Defaults to QP_MAX_ITER.
        x0 (np.ndarray, optional): Initial primal point

    Returns:
        QpResult: Best iterate with its status; max_iter and primal_infeasible
        are reported through the status rather than raised. A run whose
        linear algebra breaks down ends with status max_iter and the best
        iterate seen so far.
    """
    tol = current_config.KKT_TOL if tol is None else tol
    max_iter = current_config.QP_MAX_ITER if max_iter is None else max_iter
    check_psd(prob.Q)

    eq, upper, lower, E, e, G, h = _split_rows(prob)
    Q, q = prob.Q, prob.q
    n, me, mi = prob.n, E.shape[0], G.shape[0]

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = np.zeros(me)
    s = np.maximum(h - G @ x, 1.0)
    z = np.ones(mi)

    best = None
    stalled = False
    status = QpStatus.MAX_ITER
    iterations = 0
    for iterations in range(max_iter + 1):
        rd = Q @ x + q + E.T @ y + G.T @ z
        re = E @ x - e
        ri = G @ x + s - h
        sz = s * z
        primal = max(_inf_norm(re), _inf_norm(ri))
        residual = max(_inf_norm(rd), primal, _inf_norm(sz))
        if not np.isfinite(residual):
            if best is None:
                raise QpError("QP data is not finite")
            stalled = True
            break
        if best is None or residual < best[0]:
            best = (residual, x.copy(), y.copy(), z.copy())
        if residual <= tol:
            status = QpStatus.OPTIMAL
            break

        scale = np.sum(np.abs(y)) + np.sum(np.abs(z))
        if scale > INFEASIBILITY_SCALE:
            ray = (E.T @ y + G.T @ z) / scale
            if _inf_norm(ray) <= 1e-6 and (e @ y + h @ z) / scale < -1e-9:
                status = QpStatus.PRIMAL_INFEASIBLE
                break
        if iterations == max_iter:
            break

        d = np.minimum(z / s, D_MAX)
        try:
            solve = KktSolver(Q, G, E, d)

            def direction(rc):
                rhs = -rd - G.T @ ((z * ri - rc) / s)
                sol = solve(np.concatenate([rhs, -re]))
                dx, dy = sol[:n], sol[n:]
                ds = -ri - G @ dx
                dz = (-rc - z * ds) / s
                return dx, dy, ds, dz

            if mi:
                mu = float(sz.sum() / mi)
                dx, dy, ds, dz = direction(sz)
                alpha = min(1.0, _max_step(s, ds), _max_step(z, dz))
                mu_aff = float((s + alpha * ds) @ (z + alpha * dz) / mi)
                sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
                dx, dy, ds, dz = direction(sz + ds * dz - sigma * mu)
                alpha = min(1.0, STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
            else:
                dx, dy, ds, dz = direction(sz)
                alpha = 1.0
        except KktBreakdownError as e:
            logger.debug(f"QP stopped at iteration {iterations}: {e}")
            stalled = True
            break

        x_next, s_next, z_next = x + alpha * dx, s + alpha * ds, z + alpha * dz
        if not (np.all(np.isfinite(x_next)) and np.all(s_next > 0) and np.all(z_next > 0)):
            logger.debug(f"QP stopped at iteration {iterations}: step left the interior")
            stalled = True
            break
        x, s, z = x_next, s_next, z_next
        y = y + alpha * dy

    residual, x, y, z = best
    # a stalled run says nothing about feasibility
    if (status == QpStatus.MAX_ITER and not stalled
            and max(_inf_norm(E @ x - e), _inf_norm(np.maximum(G @ x - h, 0.0))) > 1e-4):
        status = QpStatus.PRIMAL_INFEASIBLE

    duals = np.zeros(prob.m)
    duals[eq] = y
    duals[upper] += z[:upper.size]
    duals[lower] -= z[upper.size:]

    if status != QpStatus.OPTIMAL:
        logger.debug(f"QP ({n} vars, {prob.m} rows) ended with status {status}, residual {residual:.3e}")
    return QpResult(x=x, duals=duals, kkt_residual=residual, iterations=iterations, status=status)
