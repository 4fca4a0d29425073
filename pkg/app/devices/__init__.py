"""
Device library: parameter records, device classes and the record-level
objective / prox entry points.
"""
import numpy as np

from app.devices.base_device import BaseDevice
from app.devices.device_registry import DeviceRegistry
from app.devices.generation.external_tie import ExternalTie
from app.devices.generation.generator import Generator, GeneratorEnvelope, generator_envelope
from app.devices.loads.curtailable_load import CurtailableLoad
from app.devices.loads.deferrable_load import DeferrableLoad
from app.devices.loads.fixed_load import FixedLoad
from app.devices.loads.thermal_load import ThermalLoad
from app.devices.storage.battery import Battery
from app.devices.storage.electric_vehicle import ElectricVehicle
from app.devices.transmission.line import TransmissionLine, line_hull_project, loss_gap


def make_device(spec, horizon: int, **kwargs) -> BaseDevice:
    """Build the device for a DeviceSpec over a horizon of T periods."""
    return DeviceRegistry.create(spec, horizon, **kwargs)


def objective(spec, p_d: np.ndarray):
    """Objective of a spec at schedule rows p_d (horizon taken from the last axis)."""
    p_d = np.asarray(p_d, dtype=float)
    return make_device(spec, p_d.shape[-1]).objective(p_d)


def prox(spec, v: np.ndarray, rho: float) -> np.ndarray:
    """Prox of a spec's objective at v."""
    v = np.asarray(v, dtype=float)
    return make_device(spec, v.shape[-1]).prox(v, rho)
