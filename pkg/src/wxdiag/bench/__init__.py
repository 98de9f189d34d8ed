"""Benchmark suite builders and the independent oracles that price their answers."""
