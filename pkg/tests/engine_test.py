import math

import numpy as np
import pytest

from app.devices import make_device
from app.devices.params import FixedLoadParams
from app.engine import (
    IterationState,
    SolveConfig,
    check_stop,
    initial_state,
    iterate,
    peer_to_peer_time,
    residuals,
    solve,
    update_rho,
)
from app.engine.message_passing import stopping_threshold
from config.constants import SolveStatus, TraceColumn
from tests.conftest import single_net


def _state(rho=1.0, k=1, shape=(3, 1)):
    u = np.ones(shape)
    zeros = np.zeros(shape)
    return IterationState(p=zeros, u=u, p_bar=zeros, p_prev=zeros, p_bar_prev=zeros, rho=rho, k=k)


# One iteration


def test_first_iteration_from_cold_start(toy_instance):
    network, specs = toy_instance
    state = initial_state(network, SolveConfig())
    state = iterate(state, network, specs)

    # generators stay off at v = 0; the fixed load takes its profile
    assert np.allclose(state.p[:, 0], [0.0, 0.0, 4.0])
    assert np.allclose(state.p_bar, 4.0 / 3.0)
    assert np.allclose(state.u, 4.0 / 3.0)
    assert state.k == 1

    r, s = residuals(state)
    assert r == pytest.approx(math.sqrt(3) * 4.0 / 3.0)
    assert s == pytest.approx(math.sqrt(96.0 / 9.0))


def test_nondeterministic_norms_agree(toy_instance):
    network, specs = toy_instance
    state = iterate(initial_state(network, SolveConfig()), network, specs)
    assert np.allclose(residuals(state, True), residuals(state, False))


# Stopping rule


def test_stopping_threshold():
    network = single_net(100, 96)
    config = SolveConfig(eps_abs=1e-3)
    threshold = stopping_threshold(config, network)
    assert threshold == pytest.approx(1e-3 * math.sqrt(9600))
    assert check_stop(threshold, threshold, config, network)
    assert not check_stop(1.01 * threshold, 0.0, config, network)
    assert not check_stop(0.0, 1.01 * threshold, config, network)


# Penalty adaptation


def test_update_rho_rescales_u():
    config = SolveConfig(rho_lambda=0.1, rho_mu=0.2)
    state = update_rho(_state(), r_norm=2.0, s_norm=1.0, config=config)
    expected = math.exp(0.1 * 1.0 + 0.2 * 1.0)
    assert state.rho == pytest.approx(expected)
    assert state.v_prev == pytest.approx(1.0)
    # rho * u is unchanged
    assert np.allclose(state.rho * state.u, 1.0)


def test_update_rho_is_clipped():
    config = SolveConfig(eps_abs=0.1, rho_lambda=1.0, rho_mu=0.0)
    state = update_rho(_state(), r_norm=10.0, s_norm=1.0, config=config)
    assert state.rho == pytest.approx(10.0)


def test_update_rho_skipped_on_zero_dual_residual():
    state = _state()
    assert update_rho(state, 1.0, 0.0, SolveConfig()) is state


def test_update_rho_frozen():
    config = SolveConfig(rho_freeze_iter=5)
    state = _state(k=6)
    assert update_rho(state, 2.0, 1.0, config) is state
    assert update_rho(_state(k=5), 2.0, 1.0, config).rho != 1.0


# Full solves


def test_toy_instance_converges(toy_instance):
    network, specs = toy_instance
    solution = solve(network, specs, SolveConfig(eps_abs=1e-5, max_iter=20000))

    assert solution.status == SolveStatus.CONVERGED
    assert np.allclose(-solution.p[:2, 0], [5.0 / 3.0, 7.0 / 3.0], atol=1e-2)
    assert solution.p[2, 0] == pytest.approx(4.0)
    assert solution.objective == pytest.approx(70.5 / 9.0, rel=1e-3)

    # the balance multiplier is the common marginal cost 2 u1 = 10/3
    assert solution.net_duals[0, 0] == pytest.approx(10.0 / 3.0, rel=1e-2)
    assert np.allclose(solution.prices, solution.net_duals / 3.0)


def test_trace_frame(toy_instance):
    network, specs = toy_instance
    solution = solve(network, specs, SolveConfig(max_iter=5))
    frame = solution.trace_frame()
    assert list(frame.columns) == TraceColumn.ALL
    assert len(frame) == solution.iterations
    assert list(frame["k"]) == list(range(1, solution.iterations + 1))
    assert peer_to_peer_time(solution) >= 0.0


def test_max_iter_status(example):
    network, specs = example
    solution = solve(network, specs, SolveConfig(max_iter=3))
    assert solution.status == SolveStatus.MAX_ITER
    assert solution.iterations == 3
    assert solution.p.shape == network.shape


def test_reruns_are_identical(example):
    network, specs = example
    config = SolveConfig(max_iter=40)
    first = solve(network, specs, config)
    second = solve(network, specs, config)
    threaded = solve(network, specs, config.copy(update={"threads": 2}))

    columns = ["k", "rho", "r_norm", "s_norm", "objective"]
    for other in (second, threaded):
        assert np.array_equal(first.p, other.p)
        assert first.trace_frame()[columns].equals(other.trace_frame()[columns])


def test_warm_start_needs_fewer_iterations(toy_instance):
    network, specs = toy_instance
    config = SolveConfig(eps_abs=1e-4, max_iter=20000)
    cold = solve(network, specs, config)
    warm = solve(network, specs, config, init=(cold.p, cold.u, cold.rho))
    assert warm.status == SolveStatus.CONVERGED
    assert warm.iterations < cold.iterations


def test_warm_start_at_the_optimum_stops_at_once(toy_instance):
    network, specs = toy_instance
    optimum = solve(network, specs, SolveConfig(eps_abs=1e-8, max_iter=50000))
    assert optimum.status == SolveStatus.CONVERGED

    warm = solve(network, specs, SolveConfig(eps_abs=1e-5), init=(optimum.p, optimum.u, optimum.rho))
    assert warm.status == SolveStatus.CONVERGED
    assert warm.iterations <= 2


def test_prox_failure_is_reported(toy_instance, monkeypatch):
    network, specs = toy_instance
    broken = make_device(FixedLoadParams(l=4.0), network.horizon)

    def fail(v, rho):
        raise RuntimeError("boom")

    monkeypatch.setattr(broken, "prox", fail)
    solution = solve(network, [specs[0], specs[1], broken], SolveConfig(max_iter=10))
    assert solution.status == SolveStatus.PROX_FAILURE
    assert "device 2" in solution.message
    assert solution.iterations == 0
