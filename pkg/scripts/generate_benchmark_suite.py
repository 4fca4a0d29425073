import os
import sys
from pathlib import Path

# Add the project root directory to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.cli.commands import cmd_generate
from app.utils.logger import setup_logging
from config.constants import Topology

SIZES = [30, 100, 300]
SEEDS_PER_SIZE = 5
OUTPUT_DIR = Path(os.getenv("BENCH_SUITE_DIR", "scenarios"))


def generate_suite(sizes=SIZES, seeds=SEEDS_PER_SIZE, output_dir=OUTPUT_DIR, topology=Topology.GEOMETRIC):
    """
    Write one scenario file per (size, seed).

    Args:
        sizes (list, optional): Net counts. Defaults to SIZES.
        seeds (int, optional): Scenarios per size. Defaults to SEEDS_PER_SIZE.
        output_dir (Path, optional): Target directory. Defaults to OUTPUT_DIR.
        topology (str, optional): Generated topology. Defaults to geometric.

    Returns:
        list: Written scenario paths
    """
    paths = []
    for n in sizes:
        for seed in range(seeds):
            path = Path(output_dir) / f"{topology}_N{n}_seed{seed}.json"
            if path.exists():
                print(f"{path} already exists, skipping...")
                paths.append(path)
                continue
            cmd_generate(n, seed, str(path), {"topology": topology})
            paths.append(path)
    print(f"Generated or found {len(paths)} scenarios in {output_dir}")
    return paths


def main():
    """Generate the geometric and tree benchmark suites."""
    setup_logging("WARNING")
    print("Starting benchmark suite generation...")

    try:
        generate_suite()
        generate_suite(sizes=[30], topology=Topology.TREE)
        print("Benchmark suite generation complete!")

    except Exception as e:
        print(f"Error generating benchmark suite: {str(e)}")
        raise


if __name__ == "__main__":
    main()
