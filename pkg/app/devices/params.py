"""
Parameter records for every device kind.

Each record carries a literal `kind` tag so a list of records parses as the
DeviceSpec discriminated union. Profiles may be given as a scalar (constant
over the horizon) or as a list of length T.
"""
import math
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from app.utils.exceptions import DimensionMismatchError
from config.constants import DeviceKind

Profile = Union[float, List[float]]


def as_profile(value: Profile, horizon: int, name: str = "profile") -> np.ndarray:
    """
    Broadcast a scalar or list profile to a length-T array.

    Args:
        value: Scalar or list of T values
        horizon (int): Number of periods T
        name (str): Field name for error messages

    Returns:
        np.ndarray: Profile of shape (T,)
    """
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(horizon, float(arr))
    if arr.shape != (horizon,):
        raise DimensionMismatchError(f"{name} has {arr.size} entries, horizon is {horizon}")
    return arr.copy()


def _profile_min(value: Profile) -> float:
    arr = np.asarray(value, dtype=float)
    return float(arr.min()) if arr.size else 0.0


class DeviceParams(BaseModel):
    """Common base of all parameter records."""

    class Config:
        extra = "forbid"
        allow_mutation = False


class GeneratorParams(DeviceParams):
    kind: Literal["generator"] = DeviceKind.GENERATOR
    P_min: float = 0.0
    P_max: float
    R_min: Optional[float] = None
    R_max: Optional[float] = None
    alpha: float = 0.0
    beta: float = 0.0
    switchable: bool = False
    c_fixed: float = 0.0

    @validator("P_min", "alpha", "beta", "c_fixed")
    def non_negative(cls, v, field):
        if v < 0:
            raise ValueError(f"{field.name} must be non-negative")
        return v

    @root_validator(skip_on_failure=True)
    def check_ranges(cls, values):
        if values["P_max"] <= 0:
            raise ValueError("P_max must be positive")
        if values["P_max"] < values["P_min"]:
            raise ValueError("P_max must be at least P_min")
        r_min, r_max = values.get("R_min"), values.get("R_max")
        if r_max is not None and r_max < 0:
            raise ValueError("R_max must be non-negative")
        if r_min is not None and r_min > 0:
            raise ValueError("R_min must be non-positive")
        return values

    @property
    def ramp_bounds(self):
        """(R_min, R_max) with R_min defaulting to -R_max; None when unconstrained."""
        if self.R_max is None and self.R_min is None:
            return None
        r_max = math.inf if self.R_max is None else self.R_max
        r_min = -r_max if self.R_min is None else self.R_min
        return r_min, r_max


class LineParams(DeviceParams):
    kind: Literal["transmission_line"] = DeviceKind.TRANSMISSION_LINE
    C_max: Optional[float] = None
    g: Optional[float] = None
    b: Optional[float] = None
    lossless: bool = False
    quad_cost: float = 0.0

    @root_validator(skip_on_failure=True)
    def check_line(cls, values):
        c_max = values.get("C_max")
        if c_max is not None and c_max <= 0:
            raise ValueError("C_max must be positive")
        if values["quad_cost"] < 0:
            raise ValueError("quad_cost must be non-negative")
        if values["lossless"]:
            return values
        g, b = values.get("g"), values.get("b")
        if g is None or b is None or g <= 0 or b <= 0:
            raise ValueError("lossy lines need positive g and b")
        if c_max is None:
            raise ValueError("lossy lines need a finite C_max")
        if c_max > 2 * b:
            raise ValueError("C_max exceeds the largest flow the loss model allows (2b)")
        if values["quad_cost"] > 0:
            raise ValueError("quad_cost is only supported on lossless lines")
        return values

    @classmethod
    def with_loss_at_capacity(cls, C_max: float, loss_fraction: float, gamma: float) -> "LineParams":
        """
        Lossy line whose loss at full capacity is loss_fraction * C_max, with b = gamma * g.

        Solves (L - 2g)^2 + C_max^2 g^2 / b^2 = 4 g^2 for g at loss L.
        """
        loss = loss_fraction * C_max
        g = (loss ** 2 + C_max ** 2 / gamma ** 2) / (4 * loss)
        return cls(C_max=C_max, g=g, b=gamma * g)


class BatteryParams(DeviceParams):
    kind: Literal["battery"] = DeviceKind.BATTERY
    Q_max: float
    C_max: Profile
    D_max: Profile
    q_init: float = 0.0
    q_final: Optional[float] = None
    cyclic: bool = False

    @root_validator(skip_on_failure=True)
    def check_battery(cls, values):
        q_max = values["Q_max"]
        if q_max <= 0:
            raise ValueError("Q_max must be positive")
        if _profile_min(values["C_max"]) < 0 or _profile_min(values["D_max"]) < 0:
            raise ValueError("charge and discharge rates must be non-negative")
        if not 0 <= values["q_init"] <= q_max:
            raise ValueError("q_init must lie in [0, Q_max]")
        q_final = values.get("q_final")
        if q_final is not None and not 0 <= q_final <= q_max:
            raise ValueError("q_final must lie in [0, Q_max]")
        if q_final is not None and values["cyclic"]:
            raise ValueError("q_final and cyclic are mutually exclusive")
        return values

    @property
    def final_target(self) -> Optional[float]:
        if self.cyclic:
            return self.q_init
        return self.q_final


class FixedLoadParams(DeviceParams):
    kind: Literal["fixed_load"] = DeviceKind.FIXED_LOAD
    l: Profile


class ThermalLoadParams(DeviceParams):
    kind: Literal["thermal_load"] = DeviceKind.THERMAL_LOAD
    theta_min: Profile
    theta_max: Profile
    theta_amb: Profile
    theta_init: float
    mu: float
    eta: float
    c: float
    H_max: Profile

    @root_validator(skip_on_failure=True)
    def check_thermal(cls, values):
        if values["c"] <= 0:
            raise ValueError("heat capacity c must be positive")
        if values["mu"] < 0 or values["eta"] < 0:
            raise ValueError("mu and eta must be non-negative")
        if _profile_min(values["H_max"]) < 0:
            raise ValueError("H_max must be non-negative")
        gap = np.asarray(values["theta_max"], dtype=float) - np.asarray(values["theta_min"], dtype=float)
        if np.any(gap < 0):
            raise ValueError("theta_min must not exceed theta_max")
        return values


class DeferrableLoadParams(DeviceParams):
    kind: Literal["deferrable_load"] = DeviceKind.DEFERRABLE_LOAD
    E: float
    A: int
    D: int
    L_max: float

    @root_validator(skip_on_failure=True)
    def check_window(cls, values):
        if values["E"] <= 0 or values["L_max"] <= 0:
            raise ValueError("E and L_max must be positive")
        if not 1 <= values["A"] <= values["D"]:
            raise ValueError("window must satisfy 1 <= A <= D")
        if values["L_max"] * (values["D"] - values["A"] + 1) < values["E"]:
            raise ValueError("L_max * (D - A + 1) must be at least E")
        return values


class CurtailableLoadParams(DeviceParams):
    kind: Literal["curtailable_load"] = DeviceKind.CURTAILABLE_LOAD
    l: Profile
    alpha: float = Field(..., gt=0)


class EvParams(DeviceParams):
    kind: Literal["electric_vehicle"] = DeviceKind.ELECTRIC_VEHICLE
    A: int
    D: int
    C_max: Profile
    q_init: float = 0.0
    c_des: Profile
    alpha: float = Field(..., gt=0)

    @root_validator(skip_on_failure=True)
    def check_ev(cls, values):
        if not 1 <= values["A"] <= values["D"]:
            raise ValueError("window must satisfy 1 <= A <= D")
        if _profile_min(values["C_max"]) < 0:
            raise ValueError("C_max must be non-negative")
        if values["q_init"] < 0:
            raise ValueError("q_init must be non-negative")
        return values


class ExternalTieParams(DeviceParams):
    kind: Literal["external_tie"] = DeviceKind.EXTERNAL_TIE
    E_max: Profile
    c: Profile
    gamma: Profile

    @root_validator(skip_on_failure=True)
    def check_tie(cls, values):
        if _profile_min(values["E_max"]) < 0:
            raise ValueError("E_max must be non-negative")
        if _profile_min(values["gamma"]) <= 0:
            raise ValueError("gamma must be positive")
        return values


DeviceSpec = Annotated[
    Union[
        GeneratorParams,
        LineParams,
        BatteryParams,
        FixedLoadParams,
        ThermalLoadParams,
        DeferrableLoadParams,
        CurtailableLoadParams,
        EvParams,
        ExternalTieParams,
    ],
    Field(discriminator="kind"),
]


class DeviceSpecList(BaseModel):
    """Wrapper used to parse a bare list of specs."""
    __root__: List[DeviceSpec]
