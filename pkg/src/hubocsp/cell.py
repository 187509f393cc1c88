"""Unit cell, site lattice and periodic images.

Variables are indexed species-major: ``var = species_id * n_sites + site``.
Sites are ordered lexicographically in ``(k1, k2, k3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Species",
    "UnitCell",
    "SiteGrid",
    "AtomList",
    "build_grid",
    "site_position",
    "make_supercell",
    "write_extxyz",
    "read_extxyz",
    "decode",
    "encode",
]


@dataclass(frozen=True)
class Species:
    id: int
    name: str


def make_species(names: Sequence[str]) -> list[Species]:
    names = list(names)
    if len(set(names)) != len(names):
        raise ValueError(f"species names must be unique, got {names}")
    return [Species(i, n) for i, n in enumerate(names)]


@dataclass(frozen=True)
class UnitCell:
    """Cell spanned by three basis vectors (rows of ``basis``, in Angstrom)."""

    basis: np.ndarray
    pbc: tuple[bool, bool, bool] = (True, True, True)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float).reshape(3, 3)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "pbc", tuple(bool(p) for p in self.pbc))
        if not np.all(np.isfinite(basis)):
            raise ValueError("basis vectors must be finite")
        if self.volume <= 1e-12:
            raise ValueError("basis vectors are linearly dependent (zero cell volume)")

    @property
    def volume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    @property
    def heights(self) -> np.ndarray:
        """Perpendicular distance between opposite faces, per axis."""
        a = self.basis
        h = np.empty(3)
        for i in range(3):
            cross = np.cross(a[(i + 1) % 3], a[(i + 2) % 3])
            norm = np.linalg.norm(cross)
            h[i] = self.volume / norm if norm > 0 else 0.0
        return h

    def to_cartesian(self, frac) -> np.ndarray:
        return np.asarray(frac, dtype=float) @ self.basis

    def to_fractional(self, cart) -> np.ndarray:
        return np.asarray(cart, dtype=float) @ np.linalg.inv(self.basis)

    def wrap(self, cart) -> np.ndarray:
        """Map positions back into the cell along periodic axes."""
        frac = self.to_fractional(cart)
        for i in range(3):
            if self.pbc[i]:
                frac[..., i] -= np.floor(frac[..., i])
                # floor can leave exactly 1.0 after rounding
                frac[..., i][frac[..., i] >= 1.0] = 0.0
        return self.to_cartesian(frac)


@dataclass(frozen=True)
class SiteGrid:
    granularity: tuple[int, int, int]
    counts: tuple[int, int, int]
    frac_sites: np.ndarray
    species: tuple[Species, ...]

    @property
    def n_sites(self) -> int:
        return len(self.frac_sites)

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def species_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    @property
    def num_vars(self) -> int:
        return self.n_sites * self.n_species

    def var_index(self, site: int, species: int) -> int:
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site {site} out of range [0, {self.n_sites})")
        if not 0 <= species < self.n_species:
            raise IndexError(f"species {species} out of range [0, {self.n_species})")
        return species * self.n_sites + site

    def var_site_species(self, var: int) -> tuple[int, int]:
        if not 0 <= var < self.num_vars:
            raise IndexError(f"variable {var} out of range [0, {self.num_vars})")
        return var % self.n_sites, var // self.n_sites

    @property
    def var_species(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_species), self.n_sites)

    @property
    def var_sites(self) -> np.ndarray:
        return np.tile(np.arange(self.n_sites), self.n_species)

    def site_of_coords(self, k) -> int:
        """Site index of integer lattice coordinates ``(k1, k2, k3)``."""
        k = tuple(int(v) for v in k)
        c = self.counts
        if any(not 0 <= k[i] < c[i] for i in range(3)):
            raise IndexError(f"lattice coordinates {k} outside grid {c}")
        return (k[0] * c[1] + k[1]) * c[2] + k[2]

    def species_id(self, name: str) -> int:
        for s in self.species:
            if s.name == name:
                return s.id
        raise KeyError(f"unknown species {name!r}")


def build_grid(cell: UnitCell, g, species) -> SiteGrid:
    """Discretize ``cell`` into lattice sites ``sum_i k_i / g_i * a_i``.

    ``g`` is an int or one int per axis.  Periodic axes get ``g`` points
    (``k = 0..g-1``), open axes ``g + 1`` points (``k = 0..g``).
    """
    gs = (int(g),) * 3 if np.ndim(g) == 0 else tuple(int(v) for v in g)
    if len(gs) != 3 or min(gs) < 1:
        raise ValueError(f"granularity must be >= 1 on every axis, got {g!r}")
    species = tuple(species)
    if not species:
        raise ValueError("species list is empty")
    if all(isinstance(s, str) for s in species):
        species = tuple(make_species(species))
    if [s.id for s in species] != list(range(len(species))):
        raise ValueError("species ids must be dense 0..n-1 in order")
    if len({s.name for s in species}) != len(species):
        raise ValueError("species names must be unique")

    counts = tuple(gs[i] if cell.pbc[i] else gs[i] + 1 for i in range(3))
    k = np.stack(
        np.meshgrid(*(np.arange(c) for c in counts), indexing="ij"), axis=-1
    ).reshape(-1, 3)
    frac = k / np.array(gs, dtype=float)
    frac.setflags(write=False)
    return SiteGrid(granularity=gs, counts=counts, frac_sites=frac, species=species)


def site_position(grid: SiteGrid, cell: UnitCell, site_index: int) -> np.ndarray:
    if not 0 <= site_index < grid.n_sites:
        raise IndexError(f"site {site_index} out of range [0, {grid.n_sites})")
    return grid.frac_sites[site_index] @ cell.basis


@dataclass
class AtomList:
    """Atoms as species ids plus Cartesian positions.

    ``origin`` and ``shift`` are only set on supercells: ``origin[k]`` is the
    index of the unit-cell atom that atom ``k`` copies and ``shift[k]`` the
    integer lattice translation applied to it.
    """

    species: np.ndarray
    positions: np.ndarray
    species_names: tuple[str, ...] = ()
    origin: np.ndarray | None = None
    shift: np.ndarray | None = None

    def __post_init__(self):
        self.species = np.asarray(self.species, dtype=np.int64).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if len(self.species) != len(self.positions):
            raise ValueError("species and positions differ in length")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("atom positions must be finite")
        self.species_names = tuple(self.species_names)

    def __len__(self) -> int:
        return len(self.species)

    def __iter__(self) -> Iterator[tuple[int, np.ndarray]]:
        return iter(zip(self.species.tolist(), self.positions))

    @property
    def is_original(self) -> np.ndarray:
        if self.shift is None:
            return np.ones(len(self), dtype=bool)
        return ~np.any(self.shift != 0, axis=1)

    def composition(self, n_species: int | None = None) -> tuple[int, ...]:
        n = n_species if n_species is not None else max(len(self.species_names), 1)
        if len(self.species):
            n = max(n, int(self.species.max()) + 1)
        return tuple(np.bincount(self.species, minlength=n).tolist())

    def formula(self) -> str:
        comp = self.composition()
        names = self.species_names or tuple(f"X{i}" for i in range(len(comp)))
        return "".join(f"{names[i]}{c}" for i, c in enumerate(comp) if c)

    def subset(self, mask) -> "AtomList":
        mask = np.asarray(mask)
        return AtomList(self.species[mask], self.positions[mask], self.species_names)

    def without(self, index: int) -> "AtomList":
        keep = np.ones(len(self), dtype=bool)
        keep[index] = False
        return self.subset(keep)

    def copy(self) -> "AtomList":
        return AtomList(self.species.copy(), self.positions.copy(), self.species_names)


def replication_radius(cell: UnitCell, cutoff: float) -> tuple[int, int, int]:
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    h = cell.heights
    radius = []
    for i in range(3):
        if not cell.pbc[i]:
            radius.append(0)
            continue
        if h[i] <= 1e-12:
            raise ValueError(f"degenerate cell: zero height along axis {i}")
        radius.append(int(math.ceil(cutoff / h[i] - 1e-12)))
    return tuple(radius)


def lattice_shifts(radius) -> np.ndarray:
    """Integer translations in ``[-R_i, R_i]``, the zero shift first."""
    grids = np.meshgrid(*(np.arange(-r, r + 1) for r in radius), indexing="ij")
    shifts = np.stack(grids, axis=-1).reshape(-1, 3)
    zero = np.all(shifts == 0, axis=1)
    return np.concatenate([shifts[zero], shifts[~zero]])


def make_supercell(cell: UnitCell, atoms: AtomList, cutoff: float, extra_shells: int = 0) -> AtomList:
    """Original atoms followed by their periodic images.

    Images are generated out to ``ceil(cutoff / h_i)`` cells along each
    periodic axis, ``h_i`` being the cell height; open axes get none.
    """
    radius = replication_radius(cell, cutoff)
    radius = tuple(r + extra_shells if cell.pbc[i] else 0 for i, r in enumerate(radius))
    shifts = lattice_shifts(radius)
    n = len(atoms)
    disp = shifts @ cell.basis
    pos = (atoms.positions[None, :, :] + disp[:, None, :]).reshape(-1, 3)
    return AtomList(
        species=np.tile(atoms.species, len(shifts)),
        positions=pos,
        species_names=atoms.species_names,
        origin=np.tile(np.arange(n), len(shifts)),
        shift=np.repeat(shifts, n, axis=0),
    )


def write_extxyz(path, atoms: AtomList, cell: UnitCell, comment: str = "") -> None:
    """Extended-XYZ with the lattice in the comment line."""
    lattice = " ".join(f"{v:.10f}" for v in cell.basis.reshape(-1))
    pbc = " ".join("T" if p else "F" for p in cell.pbc)
    header = f'Lattice="{lattice}" Properties=species:S:1:pos:R:3 pbc="{pbc}"'
    if comment:
        header += f" {comment}"
    names = atoms.species_names
    lines = [str(len(atoms)), header]
    for s, x in atoms:
        lines.append(f"{names[s] if names else s} {x[0]:.10f} {x[1]:.10f} {x[2]:.10f}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def read_extxyz(path, species_names: Sequence[str] | None = None) -> tuple[AtomList, UnitCell]:
    import re
    import shlex

    with open(path) as fh:
        lines = fh.read().splitlines()
    n = int(lines[0].strip())
    header = lines[1]
    m = re.search(r'Lattice="([^"]*)"', header)
    if not m:
        raise ValueError(f"{path}: missing Lattice in comment line")
    basis = np.array([float(v) for v in m.group(1).split()]).reshape(3, 3)
    pbc = (True, True, True)
    m = re.search(r'pbc="([^"]*)"', header)
    if m:
        pbc = tuple(v.upper().startswith("T") for v in shlex.split(m.group(1)))
    names = list(species_names or [])
    species, pos = [], []
    for line in lines[2 : 2 + n]:
        parts = line.split()
        if parts[0] not in names:
            names.append(parts[0])
        species.append(names.index(parts[0]))
        pos.append([float(v) for v in parts[1:4]])
    return AtomList(species, pos, tuple(names)), UnitCell(basis, pbc)


def decode(bits, grid: SiteGrid, cell: UnitCell) -> AtomList:
    """Atoms for every set variable, in variable order."""
    b = np.asarray(bits)
    if b.ndim != 1 or len(b) != grid.num_vars:
        raise ValueError(f"bitstring length {b.size} != num_vars {grid.num_vars}")
    on = np.flatnonzero(b)
    sites, species = on % grid.n_sites, on // grid.n_sites
    pos = grid.frac_sites[sites] @ cell.basis
    return AtomList(species, pos, tuple(s.name for s in grid.species))


def encode(atoms: AtomList, grid: SiteGrid, cell: UnitCell, tol: float = 1e-6) -> np.ndarray:
    """Bitstring of an atom list whose atoms sit on grid sites (up to periodic images)."""
    b = np.zeros(grid.num_vars, dtype=np.int8)
    frac = cell.to_fractional(atoms.positions) * np.array(grid.granularity)
    k = np.rint(frac)
    if np.any(np.abs(frac - k) > tol):
        raise ValueError("atom not on a grid site")
    names = [s.name for s in grid.species]
    for (s, _), kk in zip(atoms, k.astype(int)):
        for i in range(3):
            if cell.pbc[i]:
                kk[i] %= grid.granularity[i]
        sid = names.index(atoms.species_names[s]) if atoms.species_names else s
        b[grid.var_index(grid.site_of_coords(kk), sid)] = 1
    return b
