"""
End-to-end checks on generated benchmark instances. These runs take minutes;
select them with `pytest -m slow`.
"""
import math

import networkx as nx
import numpy as np
import pytest

from app.devices import make_device
from app.devices.params import CurtailableLoadParams, FixedLoadParams, GeneratorParams
from app.devices.transmission.line import loss_gap
from app.engine import SolveConfig, initial_state, iterate, solve
from app.netgen import (
    GenConfig,
    attach_devices,
    average_degree,
    device_counts,
    gen_topology,
    generate_instance,
    perturb_loads,
)
from app.oracle import GridSpec, brute_force_solve, centralized_solve
from app.utils.helpers import substream
from config.constants import DEFAULT_DEVICE_MIX, DeviceKind, RngStream, SolveStatus, Topology
from tests.conftest import single_net

pytestmark = pytest.mark.slow


def _on_grid(x, step=0.01):
    return np.round(np.asarray(x) / step) * step


def _random_small_instance(rng):
    """
    One net: a generator, up to two random middle devices, a fixed load last.

    Load levels sit on the 0.01 grid so the kinks of the curtailable costs
    are grid points.
    """
    horizon = int(rng.integers(1, 3))
    n_middle = int(rng.integers(0, 3 if horizon == 1 else 2))
    specs = [GeneratorParams(P_max=10.0, alpha=rng.uniform(0.1, 1.0), beta=rng.uniform(0.0, 1.0))]
    for _ in range(n_middle):
        if rng.random() < 0.5:
            specs.append(GeneratorParams(P_max=5.0, alpha=rng.uniform(0.1, 1.0), beta=rng.uniform(0.0, 2.0)))
        else:
            specs.append(CurtailableLoadParams(l=float(_on_grid(rng.uniform(1.0, 4.0))), alpha=rng.uniform(0.5, 3.0)))
    specs.append(FixedLoadParams(l=_on_grid(rng.uniform(1.0, 5.0, size=horizon)).tolist()))
    return single_net(len(specs), horizon), specs


def test_engine_matches_brute_force_on_small_instances():
    rng = np.random.default_rng(2024)
    grid = GridSpec(lo=-10.0, hi=10.0, step=0.01)
    for _ in range(50):
        network, specs = _random_small_instance(rng)
        solution = solve(network, specs, SolveConfig(eps_abs=1e-5, max_iter=20000))
        _, f_grid = brute_force_solve(network, specs, grid)
        assert solution.status == SolveStatus.CONVERGED
        assert abs(solution.objective - f_grid) <= max(1e-3 * abs(f_grid), grid.step)


@pytest.fixture(scope="module")
def medium_instances():
    return [generate_instance(GenConfig(n_nets=30, seed=seed, horizon=24)) for seed in range(10)]


def test_engine_matches_centralized_on_medium_instances(medium_instances):
    for instance in medium_instances:
        network, specs = instance.network, instance.specs
        reference = centralized_solve(network, specs)
        assert reference.optimal
        solution = solve(network, specs, SolveConfig(reference_objective=reference.objective))

        assert solution.status == SolveStatus.CONVERGED
        assert solution.objective == pytest.approx(reference.objective, rel=1e-3)
        assert solution.primal_infeasibility <= 1e-3
        assert np.allclose(solution.prices, reference.prices, atol=1e-2)


def test_convergence_within_iteration_budget():
    converged = 0
    for seed in range(20):
        instance = generate_instance(GenConfig(n_nets=100, seed=seed))
        solution = solve(instance.network, instance.specs, SolveConfig(eps_abs=1e-3, max_iter=1500))
        converged += solution.status == SolveStatus.CONVERGED
    assert converged >= 18


def test_iterations_do_not_grow_with_size():
    medians = []
    for n in (30, 100, 300):
        counts = []
        for seed in range(3):
            instance = generate_instance(GenConfig(n_nets=n, seed=seed))
            counts.append(solve(instance.network, instance.specs).iterations)
        medians.append(float(np.median(counts)))
    assert max(medians) <= 3 * min(medians)


def test_warm_start_saves_iterations():
    instance = generate_instance(GenConfig(n_nets=100, seed=0))
    network, specs = instance.network, instance.specs
    cold = solve(network, specs)
    init = (cold.p, cold.u, cold.rho)

    averages = []
    for sigma in (0.0, 0.05, 0.1, 0.2):
        ratios = []
        for seed in range(10):
            perturbed, _ = perturb_loads(specs, sigma, substream(seed, RngStream.PERTURBATION))
            ratios.append(solve(network, perturbed, init=init).iterations / cold.iterations)
        averages.append(float(np.mean(ratios)))
    assert averages[1] < 1.0
    assert all(b >= a - 0.05 for a, b in zip(averages, averages[1:]))


def test_dual_rows_agree_within_each_net(medium_instances):
    network, specs = medium_instances[0].network, medium_instances[0].specs
    devices = [make_device(spec, network.horizon) for spec in specs]
    state = initial_state(network, SolveConfig())
    for _ in range(25):
        state = iterate(state, network, devices)
        for terminals in network.net_index:
            rows = state.u[list(terminals)]
            assert (rows == rows[0]).all()


def test_traces_identical_across_thread_counts(medium_instances):
    network, specs = medium_instances[1].network, medium_instances[1].specs
    runs = [solve(network, specs, SolveConfig(max_iter=100, threads=t)) for t in (1, 4, 8)]
    columns = ["rho", "r_norm", "s_norm", "objective"]
    for other in runs[1:]:
        assert np.array_equal(runs[0].p, other.p)
        assert runs[0].trace_frame()[columns].equals(other.trace_frame()[columns])


def test_loss_relaxation_is_tight_on_trees():
    for seed in range(10):
        instance = generate_instance(GenConfig(n_nets=20, seed=seed, horizon=24, topology=Topology.TREE))
        network, specs = instance.network, instance.specs
        assert network.is_tree()
        solution = solve(network, specs, SolveConfig(eps_abs=1e-5, max_iter=20000))
        assert solution.status == SolveStatus.CONVERGED
        for d, spec in enumerate(specs):
            if spec.kind != DeviceKind.TRANSMISSION_LINE:
                continue
            first, second = network.device_index[d]
            assert np.max(np.abs(loss_gap(spec, solution.p[first], solution.p[second]))) <= 1e-4


def test_generator_statistics():
    for seed in range(5):
        cfg = GenConfig(n_nets=10000, seed=seed)
        graph = gen_topology(cfg)
        assert nx.is_connected(graph)
        assert average_degree(graph) == pytest.approx(2.3, abs=0.4)

        _, specs = attach_devices(graph, cfg)
        counts = device_counts(specs[:cfg.n_nets])
        for kind, share in DEFAULT_DEVICE_MIX.items():
            assert math.isclose(counts.get(kind, 0) / cfg.n_nets, share, abs_tol=0.02)
