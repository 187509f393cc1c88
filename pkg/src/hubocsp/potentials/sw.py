"""Stillinger-Weber energies for an open (non-periodic) atom list."""

from __future__ import annotations

from ..cell import AtomList, UnitCell
from .base import EnergyBreakdown, PotentialModel, energy_pbc, load_model


def sw_energy(atoms: AtomList, model: PotentialModel | None = None, cell: UnitCell | None = None) -> EnergyBreakdown:
    """Two- and three-body SW energy.

    With ``cell`` the atoms are treated as one periodic cell; otherwise the
    list is taken as an isolated cluster.
    """
    model = model if model is not None else load_model("mos2_sw")
    if model.kind != "SW":
        raise ValueError(f"expected an SW model, got {model.kind}")
    if cell is not None:
        return energy_pbc(cell, atoms, model)
    if not len(atoms):
        return EnergyBreakdown({2: 0.0, 3: 0.0})
    from .base import _species_codes

    spc = _species_codes(atoms, model)
    local = model.local_energies(atoms.positions, spc, len(atoms))
    return EnergyBreakdown({2: float(local[2].sum()) / 2, 3: float(local[3].sum()) / 3})
