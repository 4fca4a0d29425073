from typing import Dict, Optional, Tuple

from pydantic import BaseModel, Field, validator

from config.config import current_config
from config.constants import DEFAULT_DEVICE_MIX, DeviceKind, Topology

# Horizon the sampled deferrable energies are quoted for
REFERENCE_HORIZON = 96


class GenConfig(BaseModel):
    """Settings of the random benchmark generator."""
    n_nets: int
    seed: int = 0
    horizon: int = Field(REFERENCE_HORIZON, ge=1)
    distance: float = Field(0.15, gt=0)
    alpha_conn: float = Field(0.8, ge=0, le=1)
    device_mix: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_DEVICE_MIX))
    topology: str = Topology.GEOMETRIC
    calibrate: bool = True
    loss_range: Tuple[float, float] = (0.05, 0.15)
    gamma_range: Tuple[float, float] = (4.5, 5.5)
    energy_scale: Optional[float] = None
    calibration_epsilon: float = Field(default_factory=lambda: current_config.CALIBRATION_EPSILON, gt=0)
    calibration_max_iter: int = Field(default_factory=lambda: current_config.CALIBRATION_MAX_ITER, ge=1)

    class Config:
        extra = "forbid"

    @validator("n_nets")
    def at_least_two_nets(cls, v):
        if v < 2:
            raise ValueError("a generated network needs at least 2 nets")
        return v

    @validator("topology")
    def known_topology(cls, v):
        if v not in Topology.ALL:
            raise ValueError(f"topology must be one of {Topology.ALL}")
        return v

    @validator("device_mix")
    def mix_is_distribution(cls, v):
        unsupported = set(v) - set(DeviceKind.GENERATED)
        if unsupported:
            raise ValueError(f"generated benchmarks cannot sample {sorted(unsupported)}; use {DeviceKind.GENERATED}")
        if any(weight < 0 for weight in v.values()):
            raise ValueError("mix probabilities must be non-negative")
        if abs(sum(v.values()) - 1.0) > 1e-9:
            raise ValueError("mix probabilities must sum to 1")
        return v

    @validator("loss_range", "gamma_range")
    def ordered_range(cls, v):
        if not 0 < v[0] <= v[1]:
            raise ValueError("ranges must satisfy 0 < low <= high")
        return v

    @property
    def deferrable_energy_scale(self) -> float:
        """Deferrable energies are drawn for a 96-period day and scaled to the horizon."""
        if self.energy_scale is not None:
            return self.energy_scale
        return self.horizon / REFERENCE_HORIZON
