from abc import ABC, abstractmethod
from typing import Tuple, Union

import numpy as np
from loguru import logger

from app.devices.device_registry import DeviceRegistry
from app.kernel.qp import QpProblem, QpResult, solve_qp
from app.utils.exceptions import DimensionMismatchError, InvalidParametersError, QpNotConvergedError
from config.config import current_config
from config.constants import QpStatus


class BaseDevice(ABC):
    """
    Base class for all devices.

    A device owns `n_terminals` rows of the schedule matrix and defines an
    extended-real objective over them (+inf encodes a violated constraint)
    together with its proximal operator

        prox(v) = argmin_y f(y) + (rho/2) ||v - y||^2.

    Non-convex devices are represented by their convex relaxation; `relaxed`
    marks them. Instances are immutable after construction, so prox may be
    called from any thread.
    """
    kind: str = None
    n_terminals: int = 1
    relaxed: bool = False

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.kind is not None:
            DeviceRegistry.register_kind(cls.kind, cls)

    def __init__(self, params, horizon: int, feas_tol: float = None, kkt_tol: float = None):
        """
        Initialize the device.

        Args:
            params: Parameter record of the matching kind
            horizon (int): Number of time periods T
            feas_tol (float, optional): Constraint tolerance for objective(). Defaults to FEAS_TOL.
            kkt_tol (float, optional): Inner solver tolerance. Defaults to KKT_TOL.
        """
        if params.kind != self.kind:
            raise InvalidParametersError(f"{type(self).__name__} cannot take {params.kind} parameters")
        if horizon < 1:
            raise InvalidParametersError(f"horizon must be positive, got {horizon}")
        self.params = params
        self.horizon = int(horizon)
        self.feas_tol = current_config.FEAS_TOL if feas_tol is None else feas_tol
        self.kkt_tol = current_config.KKT_TOL if kkt_tol is None else kkt_tol
        self.setup()

    def setup(self):
        """Precompute profiles and matrices; raise InvalidParametersError on bad records."""

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_terminals, self.horizon

    def objective(self, p: np.ndarray, tol: float = None) -> Union[float, np.ndarray]:
        """
        Evaluate the (relaxed) objective.

        Args:
            p (np.ndarray): Schedule rows of shape (n_terminals, T), or a batch
                of them with shape (..., n_terminals, T)
            tol (float, optional): Constraint tolerance. Defaults to feas_tol.

        Returns:
            float or np.ndarray: Cost per batch element, +inf where infeasible
        """
        p = np.asarray(p, dtype=float)
        if p.ndim < 2 or p.shape[-2:] != self.shape:
            raise DimensionMismatchError(f"{self.kind} expects rows of shape {self.shape}, got {p.shape}")
        tol = self.feas_tol if tol is None else tol
        values = np.asarray(self._objective(p, tol), dtype=float)
        return float(values) if p.ndim == 2 else values

    def prox(self, v: np.ndarray, rho: float) -> np.ndarray:
        """
        Evaluate the proximal operator.

        Args:
            v (np.ndarray): Point of shape (n_terminals, T)
            rho (float): Penalty parameter, positive

        Returns:
            np.ndarray: The unique minimizer, shape (n_terminals, T)
        """
        v = np.asarray(v, dtype=float)
        if v.shape != self.shape:
            raise DimensionMismatchError(f"{self.kind} expects rows of shape {self.shape}, got {v.shape}")
        if not rho > 0:
            raise InvalidParametersError(f"rho must be positive, got {rho}")
        return self._prox(v, float(rho))

    def power_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Elementwise bounds on realizable schedules, shape (n_terminals, T) each."""
        return np.full(self.shape, -np.inf), np.full(self.shape, np.inf)

    @abstractmethod
    def _objective(self, p: np.ndarray, tol: float) -> np.ndarray:
        """Objective over a batch (..., n_terminals, T); returns shape p.shape[:-2]."""
        pass

    @abstractmethod
    def _prox(self, v: np.ndarray, rho: float) -> np.ndarray:
        pass

    def _solve(self, prob: QpProblem) -> QpResult:
        """Run the QP kernel and turn failures into device errors."""
        result = solve_qp(prob, tol=self.kkt_tol)
        if result.status == QpStatus.PRIMAL_INFEASIBLE:
            raise InvalidParametersError(f"{self.kind} constraints are infeasible")
        if result.status != QpStatus.OPTIMAL:
            if result.kkt_residual > self.feas_tol:
                raise QpNotConvergedError(f"{self.kind} prox QP did not converge", result.x, result.kkt_residual)
            logger.debug(f"{self.kind} prox QP stopped at residual {result.kkt_residual:.2e}, accepted")
        return result

    def __repr__(self):
        return f"{type(self).__name__}(T={self.horizon})"


def box_violation(x: np.ndarray, lo, hi) -> np.ndarray:
    """Largest bound violation over the last axis."""
    over = np.maximum(np.asarray(lo) - x, x - np.asarray(hi))
    return np.max(np.maximum(over, 0.0), axis=-1)


def with_infeasible(cost: np.ndarray, violation: np.ndarray, tol: float) -> np.ndarray:
    """Replace costs by +inf where the violation exceeds tol."""
    return np.where(violation > tol, np.inf, cost)
