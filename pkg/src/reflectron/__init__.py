"""Exact statevector simulation of permutation inversion by conditional reflections."""

from .algorithms import (
    compare_query_counts,
    grover_invert,
    grover_search,
    invert_exact,
    optimal_iterations,
)
from .permutations import PermutationTable, generate, inverse, read_file, write_file
from .statevector import RegisterLayout, StateVector

__version__ = "0.1.0"

__all__ = [
    "PermutationTable",
    "RegisterLayout",
    "StateVector",
    "compare_query_counts",
    "generate",
    "grover_invert",
    "grover_search",
    "invert_exact",
    "inverse",
    "optimal_iterations",
    "read_file",
    "write_file",
]
