"""Simulated annealing with flip and same-species exchange moves."""

from .kernel import CompiledPolynomial, compile_polynomial
from .runner import (
    CSV_FIELDS,
    Configuration,
    RunResult,
    bits_to_hex,
    delta_flip,
    hex_to_bits,
    read_batch_csv,
    run_batch,
    run_sa,
    run_seeds,
    sweep,
    write_batch_csv,
)
from .schedule import AnnealSchedule, temperature

__all__ = [
    "AnnealSchedule",
    "CSV_FIELDS",
    "CompiledPolynomial",
    "Configuration",
    "RunResult",
    "bits_to_hex",
    "compile_polynomial",
    "delta_flip",
    "hex_to_bits",
    "read_batch_csv",
    "run_batch",
    "run_sa",
    "run_seeds",
    "sweep",
    "temperature",
    "write_batch_csv",
]
