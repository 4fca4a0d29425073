import json

import numpy as np
import pandas as pd
import pytest

from app.cli.commands import (
    BENCH_FILE,
    BENCH_SUMMARY_FILE,
    SOLUTION_FILE,
    TRACE_FILE,
    WARMSTART_FILE,
    cmd_bench,
    cmd_generate,
    cmd_warmstart,
    resolve_instance,
    scaling_exponent,
)
from app.cli.schemas import NetworkSchema, ScenarioFile, dump_model, load_scenario, load_solution
from app.main import main
from app.utils.exceptions import ScenarioFormatError
from config.config import current_config
from config.constants import ExitCode, SolveStatus, TraceColumn


@pytest.fixture
def toy_scenario(tmp_path, toy_instance):
    network, specs = toy_instance
    scenario = ScenarioFile(network=NetworkSchema.from_network(network), devices=specs)
    return dump_model(scenario, tmp_path / "toy.json")


# generate


def test_generate_is_reproducible(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    args = ["generate", "-N", "6", "--seed", "3", "-T", "12", "--no-calibrate"]
    assert main(args + ["--out", str(first)]) == ExitCode.CONVERGED
    assert main(args + ["--out", str(second)]) == ExitCode.CONVERGED
    assert first.read_bytes() == second.read_bytes()

    scenario = load_scenario(first)
    assert scenario.explicit
    assert scenario.gen_config.n_nets == 6
    assert scenario.provenance["seed"] == 3


def test_generate_rejects_single_net(tmp_path):
    code = main(["generate", "-N", "1", "--out", str(tmp_path / "x.json")])
    assert code == ExitCode.INPUT_ERROR
    assert not (tmp_path / "x.json").exists()


def test_generated_scenario_parses_back(tmp_path):
    path = tmp_path / "scenario.json"
    written = cmd_generate(4, 0, str(path), {"horizon": 12, "calibration_max_iter": 200})
    loaded = load_scenario(path)
    assert loaded.devices == written.devices
    assert loaded.network == written.network

    network, specs = resolve_instance(loaded)
    assert network.n_nets == 4
    assert len(specs) == network.n_devices


def test_gen_config_only_scenario_is_generated(tmp_path):
    path = tmp_path / "gen_only.json"
    path.write_text(json.dumps({"gen_config": {"n_nets": 3, "seed": 1, "horizon": 12, "calibrate": False}}))
    network, specs = resolve_instance(load_scenario(path))
    assert network.n_nets == 3
    assert len(specs) == network.n_devices


# Input errors


def test_missing_scenario_file(tmp_path, capsys):
    missing = tmp_path / "nowhere.json"
    assert main(["solve", str(missing), "--out", str(tmp_path / "out")]) == ExitCode.INPUT_ERROR
    assert str(missing) in capsys.readouterr().err


def test_malformed_scenario_lists_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"gen_config": {"n_nets": 3, "horizon": -2}}))
    with pytest.raises(ScenarioFormatError) as info:
        load_scenario(path)
    assert "horizon" in str(info.value)

    path.write_text("{not json")
    with pytest.raises(ScenarioFormatError):
        load_scenario(path)


def test_unknown_solve_override_is_rejected(tmp_path, toy_instance):
    network, specs = toy_instance
    path = tmp_path / "bad_solve.json"
    doc = {
        "network": json.loads(NetworkSchema.from_network(network).json()),
        "devices": [json.loads(spec.json()) for spec in specs],
        "solve": {"max_iters": 10},
    }
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path), "--out", str(tmp_path / "out")]) == ExitCode.INPUT_ERROR


# solve


def test_solve_writes_solution_and_trace(tmp_path, toy_scenario):
    out = tmp_path / "out"
    assert main(["solve", str(toy_scenario), "--out", str(out), "--eps-abs", "1e-4"]) == ExitCode.CONVERGED

    solution = load_solution(out / SOLUTION_FILE)
    assert solution.status == SolveStatus.CONVERGED
    assert np.allclose(-np.asarray(solution.p)[:2, 0], [5.0 / 3.0, 7.0 / 3.0], atol=1e-2)

    trace = pd.read_csv(out / TRACE_FILE)
    assert list(trace.columns) == TraceColumn.ALL
    assert len(trace) == solution.iterations


def test_reparsed_scenario_reproduces_the_trace(tmp_path, toy_scenario):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["solve", str(toy_scenario), "--out", str(first), "--eps-abs", "1e-4"]) == ExitCode.CONVERGED

    reparsed = dump_model(load_scenario(toy_scenario), tmp_path / "reparsed.json")
    assert main(["solve", str(reparsed), "--out", str(second), "--eps-abs", "1e-4"]) == ExitCode.CONVERGED

    timing = [TraceColumn.DEVICE_PHASE_TIME, TraceColumn.NET_PHASE_TIME]
    original = pd.read_csv(first / TRACE_FILE).drop(columns=timing)
    repeated = pd.read_csv(second / TRACE_FILE).drop(columns=timing)
    assert len(original) > 0
    assert original.equals(repeated)
    assert load_solution(first / SOLUTION_FILE).p == load_solution(second / SOLUTION_FILE).p


def test_solve_max_iter_exit_code(tmp_path, toy_scenario):
    code = main(["solve", str(toy_scenario), "--out", str(tmp_path / "out"), "--max-iter", "2"])
    assert code == ExitCode.MAX_ITER


def test_warm_start_from_solution_file(tmp_path, toy_scenario):
    cold_dir, warm_dir = tmp_path / "cold", tmp_path / "warm"
    assert main(["solve", str(toy_scenario), "--out", str(cold_dir), "--eps-abs", "1e-4"]) == ExitCode.CONVERGED
    code = main([
        "solve", str(toy_scenario), "--out", str(warm_dir), "--eps-abs", "1e-4",
        "--warm-start", str(cold_dir / SOLUTION_FILE),
    ])
    assert code == ExitCode.CONVERGED
    assert load_solution(warm_dir / SOLUTION_FILE).iterations < load_solution(cold_dir / SOLUTION_FILE).iterations


# bench and warmstart


def test_scaling_exponent():
    sizes = np.array([10.0, 20.0, 40.0])
    assert scaling_exponent(sizes, 0.5 * sizes ** 1.5) == pytest.approx(1.5)
    assert scaling_exponent([10, 10], [1.0, 2.0]) is None


def test_bench_single_size(tmp_path, monkeypatch):
    monkeypatch.setattr(current_config, "CALIBRATION_MAX_ITER", 50)
    report = cmd_bench([3], 2, str(tmp_path), horizon=12, overrides={"max_iter": 20})
    assert report.exponent is None
    assert len(report.runs) == 2
    assert list(report.summary["runs"]) == [2]
    assert (tmp_path / BENCH_FILE).exists()
    assert (tmp_path / BENCH_SUMMARY_FILE).exists()


def test_warmstart_table(tmp_path, toy_scenario):
    table = cmd_warmstart(str(toy_scenario), [0.0, 0.1], 2, str(tmp_path), {"eps_abs": 1e-4})
    assert len(table) == 4
    assert set(table.columns) >= {"sigma", "seed", "k_cold", "k_warm", "ratio", "status"}
    unperturbed = table[table["sigma"] == 0.0]
    assert (unperturbed["k_warm"] <= unperturbed["k_cold"]).all()
    assert (tmp_path / WARMSTART_FILE).exists()


def test_log_file_records_the_solve(tmp_path, toy_scenario):
    log_path = tmp_path / "logs" / "solve.log"
    code = main(["--log-file", str(log_path), "solve", str(toy_scenario), "--out", str(tmp_path / "out")])
    assert code == ExitCode.CONVERGED
    assert "Solve finished: converged" in log_path.read_text()
