"""Brute-force verifier for tiny instances."""

from .grid import GridSpec, OracleResult, feasible, grid_search

__all__ = ["GridSpec", "OracleResult", "feasible", "grid_search"]
