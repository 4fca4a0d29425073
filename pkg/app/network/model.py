"""
Terminal / device / net network model.

Terminals are dense integer ids 0..|T|-1, so a schedule matrix is a plain
(|T|, T) float array whose rows are terminal power schedules (positive =
consumption). Devices and nets both partition the terminals; per-net
averaging is the only coupling between devices.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
from scipy import sparse

from app.utils.exceptions import DimensionMismatchError, UnknownDeviceError


@dataclass(frozen=True)
class Terminal:
    device: int
    net: int


@dataclass(frozen=True)
class DeviceRecord:
    """A device's ordered terminals; its DeviceSpec is specs[device id]."""
    terminals: Tuple[int, ...]
    label: str = ""


@dataclass(frozen=True)
class NetRecord:
    terminals: Tuple[int, ...]
    label: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class Network:
    """Immutable bipartite incidence of terminals with devices and nets."""
    horizon: int
    terminals: Tuple[Terminal, ...]
    devices: Tuple[DeviceRecord, ...]
    nets: Tuple[NetRecord, ...]

    @classmethod
    def build(cls, horizon: int, device_terminals: Sequence[Sequence[int]],
              net_terminals: Sequence[Sequence[int]], device_labels: Sequence[str] = None,
              net_labels: Sequence[str] = None) -> "Network":
        """
        Build a network from device and net terminal lists.

        Terminal records are derived from the lists; a terminal missing from
        either partition gets id -1 there, which validate() reports.

        Args:
            horizon (int): Number of time periods T
            device_terminals: Ordered terminal ids of each device
            net_terminals: Terminal ids of each net
            device_labels: Optional device names
            net_labels: Optional net names

        Returns:
            Network: The (unvalidated) network
        """
        n_terminals = 1 + max(
            [t for ts in list(device_terminals) + list(net_terminals) for t in ts] or [-1]
        )
        owner = [-1] * n_terminals
        home = [-1] * n_terminals
        for d, ts in enumerate(device_terminals):
            for t in ts:
                if 0 <= t < n_terminals and owner[t] == -1:
                    owner[t] = d
        for n, ts in enumerate(net_terminals):
            for t in ts:
                if 0 <= t < n_terminals and home[t] == -1:
                    home[t] = n
        device_labels = list(device_labels or [""] * len(device_terminals))
        net_labels = list(net_labels or [""] * len(net_terminals))
        return cls(
            horizon=int(horizon),
            terminals=tuple(Terminal(owner[t], home[t]) for t in range(n_terminals)),
            devices=tuple(DeviceRecord(tuple(int(t) for t in ts), label)
                          for ts, label in zip(device_terminals, device_labels)),
            nets=tuple(NetRecord(tuple(int(t) for t in ts), label)
                       for ts, label in zip(net_terminals, net_labels)),
        )

    @property
    def n_terminals(self) -> int:
        return len(self.terminals)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def n_nets(self) -> int:
        return len(self.nets)

    @property
    def shape(self) -> Tuple[int, int]:
        """Shape of a schedule matrix on this network."""
        return self.n_terminals, self.horizon

    @cached_property
    def terminal_net(self) -> np.ndarray:
        return np.array([term.net for term in self.terminals], dtype=np.intp)

    @cached_property
    def net_sizes(self) -> np.ndarray:
        return np.array([len(net.terminals) for net in self.nets], dtype=float)

    @cached_property
    def device_index(self) -> Tuple[np.ndarray, ...]:
        """Terminal id arrays per device, in declaration order."""
        return tuple(np.array(dev.terminals, dtype=np.intp) for dev in self.devices)

    @cached_property
    def net_index(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.array(net.terminals, dtype=np.intp) for net in self.nets)

    @cached_property
    def incidence(self) -> sparse.csr_matrix:
        """Net-by-terminal 0/1 incidence matrix."""
        rows = self.terminal_net
        cols = np.arange(self.n_terminals)
        return sparse.csr_matrix(
            (np.ones(self.n_terminals), (rows, cols)), shape=(self.n_nets, self.n_terminals)
        )

    def is_tree(self) -> bool:
        """True when the net graph induced by two-terminal devices is a forest."""
        import networkx as nx

        graph = nx.MultiGraph()
        graph.add_nodes_from(range(self.n_nets))
        for dev in self.devices:
            if len(dev.terminals) == 2:
                a, b = (self.terminals[t].net for t in dev.terminals)
                graph.add_edge(a, b)
        return nx.is_forest(graph)


def validate(network: Network) -> ValidationReport:
    """
    Check that devices and nets both partition the terminals.

    Args:
        network (Network): Network to check

    Returns:
        ValidationReport: Empty violation list iff the network is valid
    """
    violations = []
    n_terminals = network.n_terminals

    if network.horizon < 1:
        violations.append(f"horizon {network.horizon} is not positive")

    for kind, records in (("device", network.devices), ("net", network.nets)):
        counts = np.zeros(n_terminals, dtype=int)
        for idx, record in enumerate(records):
            if not record.terminals:
                violations.append(f"{kind} {idx} has no terminals")
            for t in record.terminals:
                if not 0 <= t < n_terminals:
                    violations.append(f"{kind} {idx} references unknown terminal {t}")
                    continue
                counts[t] += 1
                recorded = network.terminals[t].device if kind == "device" else network.terminals[t].net
                if recorded != idx and recorded != -1:
                    violations.append(f"terminal {t} records {kind} {recorded} but is listed by {kind} {idx}")
        for t in np.flatnonzero(counts == 0):
            violations.append(f"terminal {t} is in no {kind}")
        for t in np.flatnonzero(counts > 1):
            violations.append(f"terminal {t} in {counts[t]} {kind}s")

    for t, term in enumerate(network.terminals):
        if term.device >= network.n_devices:
            violations.append(f"terminal {t} references unknown device {term.device}")
        if term.net >= network.n_nets:
            violations.append(f"terminal {t} references unknown net {term.net}")

    return ValidationReport(violations)


def check_schedule(p: np.ndarray, network: Network) -> np.ndarray:
    """Return p as a float array, raising if it does not conform to the network."""
    p = np.asarray(p, dtype=float)
    if p.shape != network.shape:
        raise DimensionMismatchError(f"schedule has shape {p.shape}, network expects {network.shape}")
    return p


def net_sums(p: np.ndarray, network: Network) -> np.ndarray:
    """Per-net total power, shape (|N|, T)."""
    p = check_schedule(p, network)
    return np.asarray(network.incidence @ p)


def net_average(p: np.ndarray, network: Network) -> np.ndarray:
    """
    Average net power imbalance.

    Row t of the result is the mean schedule of the terminals on t's net, so
    every terminal of a net receives an identical row.

    Args:
        p (np.ndarray): Schedule matrix (|T|, T)
        network (Network): The network

    Returns:
        np.ndarray: Schedule matrix of net averages
    """
    averages = net_sums(p, network) / network.net_sizes[:, None]
    return averages[network.terminal_net]


def device_view(p: np.ndarray, network: Network, device: int) -> np.ndarray:
    """
    Rows of p for one device's terminals, in the device's declared order.

    Args:
        p (np.ndarray): Schedule matrix
        network (Network): The network
        device (int): Device id

    Returns:
        np.ndarray: (|d|, T) copy of the device's rows
    """
    if not 0 <= device < network.n_devices:
        raise UnknownDeviceError(f"unknown device {device}")
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != network.n_terminals:
        raise DimensionMismatchError(f"schedule has shape {p.shape}, network expects {network.shape}")
    return p[network.device_index[device]]
