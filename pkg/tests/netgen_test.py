import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from app.netgen import (
    GenConfig,
    apply_load_factors,
    attach_devices,
    device_counts,
    draw_load_factors,
    gen_topology,
    generate_instance,
    perturb_loads,
    sample_params,
)
from app.netgen.attach import MIN_DEFERRABLE_SPAN
from app.network.model import validate
from app.utils.exceptions import InvalidParametersError
from config.constants import DeviceKind, GeneratorClass, Topology


# GenConfig


def test_gen_config_rejects_single_net():
    with pytest.raises(ValidationError):
        GenConfig(n_nets=1)


def test_gen_config_rejects_bad_mix():
    with pytest.raises(ValidationError):
        GenConfig(n_nets=5, device_mix={"generator": 0.5, "battery": 0.2})
    with pytest.raises(ValidationError):
        GenConfig(n_nets=5, device_mix={"generator": 0.5, "transmission_line": 0.5})


@pytest.mark.parametrize("kind", [DeviceKind.THERMAL_LOAD, DeviceKind.ELECTRIC_VEHICLE, DeviceKind.EXTERNAL_TIE])
def test_gen_config_rejects_kinds_without_a_sampler(kind):
    with pytest.raises(ValidationError, match="cannot sample"):
        GenConfig(n_nets=5, device_mix={"generator": 0.5, kind: 0.5})


def test_every_generated_kind_has_a_sampler(rng):
    for kind in DeviceKind.GENERATED:
        assert sample_params(kind, rng, 24).kind == kind


def test_deferrable_energy_scale():
    assert GenConfig(n_nets=3).deferrable_energy_scale == pytest.approx(1.0)
    assert GenConfig(n_nets=3, horizon=24).deferrable_energy_scale == pytest.approx(0.25)
    assert GenConfig(n_nets=3, horizon=24, energy_scale=2.0).deferrable_energy_scale == 2.0


# Topology


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_topology_is_connected(seed):
    for n in (2, 10, 60):
        graph = gen_topology(GenConfig(n_nets=n, seed=seed))
        assert graph.number_of_nodes() == n
        assert nx.is_connected(graph)
        assert all("length" in data for _, _, data in graph.edges(data=True))


def test_topology_is_reproducible():
    cfg = GenConfig(n_nets=40, seed=7)
    first, second = gen_topology(cfg), gen_topology(cfg)
    assert sorted(first.edges()) == sorted(second.edges())
    assert sorted(gen_topology(GenConfig(n_nets=40, seed=8)).edges()) != sorted(first.edges())


def test_tree_topology():
    graph = gen_topology(GenConfig(n_nets=30, seed=3, topology=Topology.TREE))
    assert nx.is_tree(graph)
    assert graph.number_of_nodes() == 30


# Attachment and parameter sampling


def test_attach_devices():
    cfg = GenConfig(n_nets=20, seed=5, horizon=24)
    graph = gen_topology(cfg)
    network, specs = attach_devices(graph, cfg)

    n_edges = graph.number_of_edges()
    assert network.n_terminals == 20 + 2 * n_edges
    assert network.n_devices == 20 + n_edges
    assert network.n_nets == 20
    assert validate(network).ok
    assert all(spec.kind in DeviceKind.SINGLE_TERMINAL for spec in specs[:20])
    assert all(spec.kind == DeviceKind.TRANSMISSION_LINE for spec in specs[20:])
    assert sum(device_counts(specs).values()) == len(specs)


def test_sampled_generators_come_from_the_table(rng):
    rows = []
    for _ in range(30):
        spec = sample_params(DeviceKind.GENERATOR, rng, 96)
        rows.append((spec.P_min, spec.P_max, spec.R_max, spec.alpha, spec.beta))
    assert set(rows) <= set(GeneratorClass.TABLE.values())
    assert len(set(rows)) > 1


def test_sampled_fixed_load_is_positive(rng):
    for _ in range(20):
        spec = sample_params(DeviceKind.FIXED_LOAD, rng, 96)
        assert len(spec.l) == 96
        assert min(spec.l) >= 0.0


def test_sampled_deferrable_load_is_feasible(rng):
    for _ in range(50):
        spec = sample_params(DeviceKind.DEFERRABLE_LOAD, rng, 96)
        assert 1 <= spec.A < spec.D <= 96
        assert spec.D - spec.A >= MIN_DEFERRABLE_SPAN
        assert spec.L_max * (spec.D - spec.A + 1) > spec.E


def test_deferrable_load_needs_long_horizon(rng):
    with pytest.raises(InvalidParametersError):
        sample_params(DeviceKind.DEFERRABLE_LOAD, rng, MIN_DEFERRABLE_SPAN)
    with pytest.raises(InvalidParametersError):
        sample_params(DeviceKind.THERMAL_LOAD, rng, 96)


# Calibration


def test_generated_instance_is_calibrated():
    cfg = GenConfig(n_nets=10, seed=1, horizon=12, calibration_max_iter=300)
    instance = generate_instance(cfg)

    lines = [spec for spec in instance.specs if spec.kind == DeviceKind.TRANSMISSION_LINE]
    assert len(lines) == instance.graph.number_of_edges()
    for line in lines:
        assert not line.lossless
        assert line.C_max >= 10.0
        assert 4.5 <= line.b / line.g <= 5.5

    prov = instance.provenance
    assert prov["n_nets"] == 10
    assert prov["calibration"]["iterations"] <= 300
    assert prov["device_counts"][DeviceKind.TRANSMISSION_LINE] == len(lines)


def test_uncalibrated_instance_keeps_placeholder_lines():
    instance = generate_instance(GenConfig(n_nets=6, seed=2, horizon=12, calibrate=False))
    lines = [spec for spec in instance.specs if spec.kind == DeviceKind.TRANSMISSION_LINE]
    assert all(line.lossless for line in lines)
    assert instance.provenance["calibration"] is None


# Load perturbation


def test_zero_sigma_leaves_loads_unchanged(rng):
    instance = generate_instance(GenConfig(n_nets=8, seed=4, horizon=12, calibrate=False))
    perturbed, factors = perturb_loads(instance.specs, 0.0, rng)
    assert np.allclose(factors, 1.0)
    assert perturbed == instance.specs


def test_only_loads_are_perturbed(rng):
    instance = generate_instance(GenConfig(n_nets=12, seed=6, horizon=12, calibrate=False))
    factors = draw_load_factors(instance.specs, 0.3, rng)
    for spec, factor in zip(instance.specs, factors):
        if spec.kind not in DeviceKind.LOADS:
            assert factor == 1.0

    perturbed = apply_load_factors(instance.specs, factors)
    for before, after, factor in zip(instance.specs, perturbed, factors):
        if before.kind == DeviceKind.FIXED_LOAD:
            assert np.allclose(after.l, np.asarray(before.l) * factor)
        elif before.kind == DeviceKind.DEFERRABLE_LOAD:
            assert after.E == pytest.approx(before.E * factor)
            assert after.L_max == pytest.approx(before.L_max * factor)


def test_lognormal_factors(rng):
    specs = [sample_params(DeviceKind.CURTAILABLE_LOAD, rng, 4) for _ in range(4000)]
    factors = draw_load_factors(specs, 0.1, rng)
    # E[exp(sigma X)] = exp(sigma^2 / 2)
    assert factors.mean() == pytest.approx(np.exp(0.005), rel=1e-2)
    assert np.log(factors).std() == pytest.approx(0.1, rel=0.1)
