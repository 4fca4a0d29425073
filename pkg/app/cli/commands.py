"""
Command implementations behind the generate, solve, bench and warmstart
subcommands. Each command takes plain arguments, writes its files and
returns what it produced; app/main.py handles parsing and exit codes.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from sklearn.linear_model import LinearRegression

from app.cli.schemas import NetworkSchema, ScenarioFile, SolutionFile, dump_model, load_scenario, load_solution
from app.engine import Solution, SolveConfig, peer_to_peer_time, solve
from app.netgen import GenConfig, generate_instance, perturb_loads
from app.network.model import Network
from app.utils.helpers import mean_confidence_interval, stopwatch, substream
from config.constants import RngStream

SOLUTION_FILE = "solution.json"
TRACE_FILE = "trace.csv"
BENCH_FILE = "bench.csv"
BENCH_SUMMARY_FILE = "bench_summary.csv"
WARMSTART_FILE = "warmstart.csv"


def resolve_instance(scenario: ScenarioFile) -> Tuple[Network, List]:
    """Network and specs of a scenario, generating them when only gen_config is given."""
    if scenario.explicit:
        return scenario.network.to_network(), list(scenario.devices)
    instance = generate_instance(scenario.gen_config)
    return instance.network, instance.specs


def cmd_generate(n_nets: int, seed: int, out: str, overrides: Dict[str, Any] = None,
                 solve_overrides: Dict[str, Any] = None) -> ScenarioFile:
    """
    Generate a benchmark scenario and write it to out.

    Args:
        n_nets (int): Number of nets N (at least 2)
        seed (int): Run seed
        out (str): Scenario file path
        overrides (dict, optional): Extra GenConfig fields (horizon, topology, ...)
        solve_overrides (dict, optional): SolveConfig fields stored in the scenario

    Returns:
        ScenarioFile: The written scenario
    """
    cfg = GenConfig(n_nets=n_nets, seed=seed, **(overrides or {}))
    instance = generate_instance(cfg)
    scenario = ScenarioFile(
        gen_config=cfg,
        network=NetworkSchema.from_network(instance.network),
        devices=instance.specs,
        solve=solve_overrides or {},
        provenance=instance.provenance,
    )
    path = dump_model(scenario, out)

    prov = instance.provenance
    counts = ", ".join(f"{kind}={count}" for kind, count in prov["device_counts"].items())
    print(f"Wrote {path}")
    print(f"  nets: {prov['n_nets']}  edges: {prov['n_edges']}  average degree: {prov['average_degree']:.2f}")
    print(f"  devices: {counts}")
    return scenario


def write_solution(solution: Solution, network: Network, out_dir) -> Tuple[Path, Path]:
    """Write solution.json and trace.csv into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    solution_path = dump_model(SolutionFile.from_solution(solution, network), out_dir / SOLUTION_FILE)
    trace_path = out_dir / TRACE_FILE
    solution.trace_frame().to_csv(trace_path, index=False)
    return solution_path, trace_path


def cmd_solve(scenario_path: str, out_dir: str, overrides: Dict[str, Any] = None,
              warm_start: Optional[str] = None) -> Solution:
    """
    Solve a scenario and write its solution and trace.

    Args:
        scenario_path (str): Scenario file
        out_dir (str): Output directory for solution.json and trace.csv
        overrides (dict, optional): SolveConfig fields from the command line
        warm_start (str, optional): A solution.json to start from

    Returns:
        Solution: The engine's result
    """
    scenario = load_scenario(scenario_path)
    config = scenario.solve_config(**(overrides or {}))
    network, specs = resolve_instance(scenario)
    init = load_solution(warm_start).warm_start() if warm_start else None

    solution = solve(network, specs, config, init=init)
    solution_path, trace_path = write_solution(solution, network, out_dir)
    print(
        f"{solution.status}: {solution.iterations} iterations, objective {solution.objective:.6g}, "
        f"{solution.solve_time_s:.2f}s"
    )
    print(f"Wrote {solution_path} and {trace_path}")
    return solution


@dataclass
class BenchReport:
    runs: pd.DataFrame
    summary: pd.DataFrame
    exponent: Optional[float] = None


def scaling_exponent(sizes: Sequence[float], times: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(time) against log(N); None with fewer than two sizes."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.unique(sizes).size < 2:
        return None
    model = LinearRegression().fit(np.log(sizes)[:, None], np.log(times))
    return float(model.coef_[0])


def cmd_bench(sizes: Sequence[int], seeds: int, out_dir: str, threads: int = 1,
              horizon: int = None, overrides: Dict[str, Any] = None) -> BenchReport:
    """
    Time the engine on freshly generated instances of each size.

    Args:
        sizes (list): Net counts N
        seeds (int): Instances per size (seeds 0..seeds-1)
        out_dir (str): Output directory for bench.csv and bench_summary.csv
        threads (int, optional): Engine worker threads. Defaults to 1.
        horizon (int, optional): Horizon T. Defaults to GenConfig's.
        overrides (dict, optional): SolveConfig fields

    Returns:
        BenchReport: Per-run rows, per-size summary and the scaling exponent
    """
    gen_extra = {"horizon": horizon} if horizon else {}
    config = SolveConfig(threads=threads, **(overrides or {}))
    rows = []
    for n in sizes:
        for seed in range(seeds):
            instance = generate_instance(GenConfig(n_nets=n, seed=seed, **gen_extra))
            with stopwatch() as timing:
                solution = solve(instance.network, instance.specs, config)
            rows.append({
                "n_nets": n,
                "seed": seed,
                "n_terminals": instance.network.n_terminals,
                "status": solution.status,
                "iterations": solution.iterations,
                "solve_time_s": timing["elapsed"],
                "p2p_time_s": peer_to_peer_time(solution),
            })
            logger.info(f"bench N={n} seed={seed}: {solution.status} in {solution.iterations} iterations")

    runs = pd.DataFrame(rows)
    summary_rows = []
    for n, group in runs.groupby("n_nets", sort=True):
        mean, low, high = mean_confidence_interval(group["solve_time_s"])
        summary_rows.append({
            "n_nets": n,
            "runs": len(group),
            "mean_time_s": mean,
            "ci_low_s": low,
            "ci_high_s": high,
            "median_iterations": float(group["iterations"].median()),
            "mean_p2p_time_s": float(group["p2p_time_s"].mean()),
        })
    summary = pd.DataFrame(summary_rows)
    exponent = scaling_exponent(summary["n_nets"], summary["mean_time_s"])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs.to_csv(out_dir / BENCH_FILE, index=False)
    summary.to_csv(out_dir / BENCH_SUMMARY_FILE, index=False)

    print(summary.to_string(index=False))
    if exponent is not None:
        print(f"Scaling exponent (log-log least squares): {exponent:.3f}")
    return BenchReport(runs=runs, summary=summary, exponent=exponent)


def cmd_warmstart(scenario_path: str, sigmas: Sequence[float], seeds: int, out_dir: str,
                  overrides: Dict[str, Any] = None) -> pd.DataFrame:
    """
    Compare warm and cold starts after random load perturbations.

    The scenario is solved cold once; for every sigma and seed the loads are
    scaled by lognormal factors and the perturbed problem is solved from the
    cold solution.

    Args:
        scenario_path (str): Scenario file
        sigmas (list): Perturbation log-scale standard deviations
        seeds (int): Perturbations per sigma (seeds 0..seeds-1)
        out_dir (str): Output directory for warmstart.csv
        overrides (dict, optional): SolveConfig fields

    Returns:
        pd.DataFrame: One row per (sigma, seed) with K_warm, K_cold and their ratio
    """
    scenario = load_scenario(scenario_path)
    config = scenario.solve_config(**(overrides or {}))
    network, specs = resolve_instance(scenario)

    cold = solve(network, specs, config)
    init = (cold.p, cold.u, cold.rho)
    logger.info(f"Cold start: {cold.status} after {cold.iterations} iterations")

    rows = []
    for sigma in sigmas:
        for seed in range(seeds):
            perturbed, factors = perturb_loads(specs, sigma, substream(seed, RngStream.PERTURBATION))
            warm = solve(network, perturbed, config, init=init)
            rows.append({
                "sigma": sigma,
                "seed": seed,
                "k_cold": cold.iterations,
                "k_warm": warm.iterations,
                "ratio": warm.iterations / max(cold.iterations, 1),
                "status": warm.status,
                "mean_factor": float(np.mean(factors)),
            })

    table = pd.DataFrame(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / WARMSTART_FILE, index=False)
    print(table.groupby("sigma", sort=True)["ratio"].mean().to_string())
    return table
