"""Evaluate the deterministic pipeline on the shipped benchmark suites.

Three suites live under benchmarks/: thirty index questions with frozen
ground truths, ten figure-reading cases probed against rendered SVGs, and
five end-to-end diagnosis scenarios pinned to their expected loop behavior.
"""

from pathlib import Path

from wxdiag.harness import (BenchConfig, DeterministicSystem, format_summary,
                            load_suite, run_benchmark)

BENCH_ROOT = Path(__file__).resolve().parent.parent / "benchmarks"

FLOORS = {"index": {"index_gate": 1.0}, "figure": {"alignment": 1.0}, "e2e": {}}


def main():
    for suite in ("index", "figure", "e2e"):
        cases = load_suite(BENCH_ROOT / suite)
        summary = run_benchmark(cases, DeterministicSystem(),
                                BenchConfig(floors=FLOORS[suite]))
        print(format_summary(summary))
        print()


if __name__ == "__main__":
    main()
