"""Benchmark suite scripts."""
