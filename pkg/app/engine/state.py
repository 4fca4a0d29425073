from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, root_validator

from config.config import current_config
from config.constants import SolveStatus, TraceColumn


class SolveConfig(BaseModel):
    """Message passing settings; defaults come from the active Config."""
    eps_abs: float = Field(default_factory=lambda: current_config.EPS_ABS, gt=0)
    rho0: float = Field(default_factory=lambda: current_config.RHO0, gt=0)
    rho_lambda: float = Field(default_factory=lambda: current_config.RHO_LAMBDA, ge=0)
    rho_mu: float = Field(default_factory=lambda: current_config.RHO_MU, ge=0)
    rho_min: Optional[float] = None
    rho_max: Optional[float] = None
    max_iter: int = Field(default_factory=lambda: current_config.MAX_ITER, ge=1)
    rho_freeze_iter: int = Field(default_factory=lambda: current_config.RHO_FREEZE_ITER, ge=0)
    threads: int = Field(default_factory=lambda: current_config.THREADS, ge=1)
    deterministic: bool = Field(default_factory=lambda: current_config.DETERMINISTIC)
    log_every: int = Field(default_factory=lambda: current_config.LOG_EVERY, ge=1)
    reference_objective: Optional[float] = None

    class Config:
        extra = "forbid"

    @root_validator(skip_on_failure=True)
    def check_bounds(cls, values):
        lo = values.get("rho_min") or values["eps_abs"]
        hi = values.get("rho_max") or 1.0 / values["eps_abs"]
        if not 0 < lo <= hi:
            raise ValueError(f"rho bounds [{lo}, {hi}] are not ordered")
        return values

    @property
    def rho_bounds(self) -> Tuple[float, float]:
        """Clip range for rho, [eps_abs, 1/eps_abs] unless overridden."""
        return (self.rho_min or self.eps_abs), (self.rho_max or 1.0 / self.eps_abs)


@dataclass
class IterationState:
    """
    Iterates of prox-average message passing.

    p, u and p_bar are schedule matrices; u rows are identical across the
    terminals of each net. p_prev and p_bar_prev hold the previous iterate
    for the dual residual.
    """
    p: np.ndarray
    u: np.ndarray
    p_bar: np.ndarray
    p_prev: np.ndarray
    p_bar_prev: np.ndarray
    rho: float
    v_prev: float = 0.0
    k: int = 0
    device_phase_s: float = 0.0
    net_phase_s: float = 0.0


@dataclass
class TraceRow:
    k: int
    rho: float
    r_norm: float
    s_norm: float
    objective: float
    primal_infeasibility: float
    relative_suboptimality: float = float("nan")
    device_phase_s: float = 0.0
    net_phase_s: float = 0.0


@dataclass
class Solution:
    """
    Result of a solve.

    prices[n] is the locational marginal price profile of net n (rho u/|n|);
    net_duals[n] is the multiplier of the net's balance rows (rho u).
    """
    p: np.ndarray
    prices: np.ndarray
    net_duals: np.ndarray
    objective: float
    status: str
    iterations: int
    rho: float
    u: np.ndarray
    trace: List[TraceRow] = field(default_factory=list)
    solve_time_s: float = 0.0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED

    @property
    def primal_infeasibility(self) -> float:
        return self.trace[-1].primal_infeasibility if self.trace else float("nan")

    def trace_frame(self) -> pd.DataFrame:
        """Trace as a DataFrame with one row per iteration."""
        return pd.DataFrame([asdict(row) for row in self.trace], columns=TraceColumn.ALL)
