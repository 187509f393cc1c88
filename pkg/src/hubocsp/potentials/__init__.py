"""Interatomic potentials and the periodic energy oracle."""

from ._kernels import ZERO_DISTANCE_ENERGY
from .base import (
    ConfigurationError,
    EnergyBreakdown,
    PeriodicEnergy,
    PotentialModel,
    energy_pbc,
    load_model,
    oracle_difference,
    oracle_F,
    parse_model,
)
from .lj import lj_pair
from .sw import sw_energy

__all__ = [
    "ZERO_DISTANCE_ENERGY",
    "ConfigurationError",
    "EnergyBreakdown",
    "PeriodicEnergy",
    "PotentialModel",
    "energy_pbc",
    "load_model",
    "oracle_difference",
    "oracle_F",
    "parse_model",
    "lj_pair",
    "sw_energy",
]
