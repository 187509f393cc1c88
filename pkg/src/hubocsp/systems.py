"""Preset cells and reference structures for krypton and monolayer MoS2."""

from __future__ import annotations

import math

import numpy as np

from .cell import AtomList, UnitCell, build_grid

KR_LATTICE = 5.653
MOS2_A = 3.2
MOS2_THICKNESS = 3.19


def kr_cell() -> UnitCell:
    return UnitCell(np.eye(3) * KR_LATTICE, (True, True, True))


def kr_fcc() -> AtomList:
    """Conventional FCC cell: four atoms on the cubic face centres."""
    frac = np.array([[0, 0, 0], [0.5, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0.5]])
    return AtomList(np.zeros(4, dtype=int), frac @ kr_cell().basis, ("Kr",))


def kr_fcc_vacancy() -> AtomList:
    return kr_fcc().without(3)


def mos2_cell() -> UnitCell:
    """2x2 hexagonal supercell; periodic in-plane, open along the layer normal."""
    a = 2 * MOS2_A
    basis = [[a, 0, 0], [-a / 2, math.sqrt(3) * a / 2, 0], [0, 0, MOS2_THICKNESS]]
    return UnitCell(basis, (True, True, False))


def _mos2(top_shift: tuple[float, float]) -> AtomList:
    species, frac = [], []
    for i in range(2):
        for j in range(2):
            species += [1, 1, 0]
            frac += [
                [i / 2, j / 2, 0.0],
                [i / 2 + top_shift[0], j / 2 + top_shift[1], 1.0],
                [1 / 6 + i / 2, 1 / 3 + j / 2, 0.5],
            ]
    frac = np.array(frac)
    frac[:, :2] %= 1.0
    return AtomList(species, frac @ mos2_cell().basis, ("Mo", "S"))


def mos2_2h() -> AtomList:
    """Mo4S8 2H phase: both sulfur layers eclipsed."""
    return _mos2((0.0, 0.0))


def mos2_1t() -> AtomList:
    """Mo4S8 1T phase: the top sulfur layer sits over the opposite hollow."""
    return _mos2((1 / 3, 1 / 6))


def kr_grid(g: int = 4):
    return build_grid(kr_cell(), g, ["Kr"])


def mos2_grid(g: int = 6):
    """In-plane granularity ``g``; three layers (bottom S, Mo, top S) along the normal."""
    return build_grid(mos2_cell(), (g, g, 2), ["Mo", "S"])
