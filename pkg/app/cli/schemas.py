"""
Scenario and solution file formats.

Both are versioned JSON documents validated with pydantic; unknown fields
are rejected. Traces are CSV tables written from Solution.trace_frame().
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from app.devices.params import DeviceSpec
from app.engine import Solution, SolveConfig
from app.netgen.gen_config import GenConfig
from app.network.model import Network
from app.utils.exceptions import ScenarioFormatError
from config.config import current_config

FORMAT_VERSION = current_config.SCENARIO_FORMAT_VERSION


# Network schema
class NetworkSchema(BaseModel):
    horizon: int = Field(..., ge=1)
    device_terminals: List[List[int]]
    net_terminals: List[List[int]]
    device_labels: Optional[List[str]] = None
    net_labels: Optional[List[str]] = None

    class Config:
        extra = "forbid"

    @classmethod
    def from_network(cls, network: Network) -> "NetworkSchema":
        return cls(
            horizon=network.horizon,
            device_terminals=[list(dev.terminals) for dev in network.devices],
            net_terminals=[list(net.terminals) for net in network.nets],
            device_labels=[dev.label for dev in network.devices],
            net_labels=[net.label for net in network.nets],
        )

    def to_network(self) -> Network:
        return Network.build(
            horizon=self.horizon,
            device_terminals=self.device_terminals,
            net_terminals=self.net_terminals,
            device_labels=self.device_labels,
            net_labels=self.net_labels,
        )


# Scenario schema
class ScenarioFile(BaseModel):
    """
    A scheduling problem: an explicit network with device specs, or the
    generator settings that produce one (or both, the explicit network
    taking precedence). `solve` holds SolveConfig overrides.
    """
    format_version: int = FORMAT_VERSION
    gen_config: Optional[GenConfig] = None
    network: Optional[NetworkSchema] = None
    devices: Optional[List[DeviceSpec]] = None
    solve: Dict[str, Any] = Field(default_factory=dict)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    class Config:
        extra = "forbid"

    @validator("format_version")
    def supported_version(cls, v):
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {v}, expected {FORMAT_VERSION}")
        return v

    @validator("solve")
    def valid_overrides(cls, v):
        SolveConfig(**v)
        return v

    @root_validator(skip_on_failure=True)
    def has_problem(cls, values):
        network, devices = values.get("network"), values.get("devices")
        if (network is None) != (devices is None):
            raise ValueError("network and devices must be given together")
        if network is None and values.get("gen_config") is None:
            raise ValueError("a scenario needs either network + devices or gen_config")
        if network is not None and len(devices) != len(network.device_terminals):
            raise ValueError(
                f"{len(devices)} device specs for {len(network.device_terminals)} devices"
            )
        return values

    @property
    def explicit(self) -> bool:
        return self.network is not None

    def solve_config(self, **overrides) -> SolveConfig:
        """SolveConfig from the file's overrides, then the given ones."""
        settings = dict(self.solve)
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return SolveConfig(**settings)


# Solution schema
class SolutionFile(BaseModel):
    format_version: int = FORMAT_VERSION
    status: str
    iterations: int
    objective: float
    rho: float
    solve_time_s: float
    message: str = ""
    device_labels: List[str] = Field(default_factory=list)
    net_labels: List[str] = Field(default_factory=list)
    p: List[List[float]]
    u: List[List[float]]
    prices: List[List[float]]
    net_duals: List[List[float]]

    class Config:
        extra = "forbid"

    @classmethod
    def from_solution(cls, solution: Solution, network: Network) -> "SolutionFile":
        return cls(
            status=solution.status,
            iterations=solution.iterations,
            objective=solution.objective,
            rho=solution.rho,
            solve_time_s=solution.solve_time_s,
            message=solution.message,
            device_labels=[dev.label for dev in network.devices],
            net_labels=[net.label for net in network.nets],
            p=solution.p.tolist(),
            u=solution.u.tolist(),
            prices=solution.prices.tolist(),
            net_duals=solution.net_duals.tolist(),
        )

    def warm_start(self) -> Tuple[np.ndarray, np.ndarray, float]:
        """(p, u, rho) for engine.solve(init=...)."""
        return np.asarray(self.p, dtype=float), np.asarray(self.u, dtype=float), self.rho


def _read(path, model):
    path = Path(path)
    if not path.is_file():
        raise ScenarioFormatError(str(path), message="file not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(str(path), message=f"invalid JSON: {str(e)}")
    try:
        return model.parse_obj(data)
    except ValidationError as e:
        raise ScenarioFormatError(str(path), errors=e.errors())


def load_scenario(path) -> ScenarioFile:
    return _read(path, ScenarioFile)


def load_solution(path) -> SolutionFile:
    return _read(path, SolutionFile)


def dump_model(model: BaseModel, path) -> Path:
    """Write a schema document as indented JSON, None fields omitted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.json(indent=2, exclude_none=True) + "\n")
    return path
