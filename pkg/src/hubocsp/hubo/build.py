"""HUBO coefficients of the periodic cell energy.

The coefficient of a variable set ``Y`` is ``E(Y) - sum_{Z < Y} H_Z``.  Two
routes compute it:

``direct``
    Every interaction term of the fully occupied supercell that touches the
    original cell is credited, with weight (originals in the term) / order,
    to the set of distinct variables it involves.  Summing those credits
    over the subsets of a configuration reproduces its periodic energy, so
    each credit total is exactly the inclusion-exclusion coefficient.

``inclusion-exclusion``
    Calls :func:`energy_pbc` on every subset of every candidate tuple.  Slow;
    kept as the reference route for small grids.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numba as nb
import numpy as np
from numba import types
from numba.typed import Dict

from ..cell import AtomList, SiteGrid, UnitCell, lattice_shifts, make_supercell, replication_radius
from ..potentials import PotentialModel, energy_pbc
from ..potentials import _kernels as K
from .polynomial import HuboPolynomial

MAX_SUPPORTED_ORDER = 3


@nb.njit(cache=True)
def _key2(a, b, n):
    if a > b:
        a, b = b, a
    return a * n + b


@nb.njit(cache=True)
def _sort3(a, b, c):
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    return a, b, c


@nb.njit(cache=True)
def _credit(d1, d2, d3, va, vb, vc, n, w):
    """Add ``w`` to the coefficient of the distinct variables among va, vb, vc."""
    a, b, c = _sort3(va, vb, vc)
    if a == b and b == c:
        d1[a] = d1.get(a, 0.0) + w
    elif a == b or b == c:
        key = _key2(a, c, n)
        d2[key] = d2.get(key, 0.0) + w
    else:
        key = (a * n + b) * n + c
        d3[key] = d3.get(key, 0.0) + w


@nb.njit(cache=True)
def _accumulate(kind, pair_rows, trip_rows, positions, species, var_of, n_orig, n_vars, with_triplets):
    d1 = Dict.empty(types.int64, types.float64)
    d2 = Dict.empty(types.int64, types.float64)
    d3 = Dict.empty(types.int64, types.float64)
    n = positions.shape[0]
    for j in range(n_orig):
        for k in range(n):
            if k == j:
                continue
            dx = positions[k, 0] - positions[j, 0]
            dy = positions[k, 1] - positions[j, 1]
            dz = positions[k, 2] - positions[j, 2]
            v = K.pair_value(kind, pair_rows[species[j], species[k]], np.sqrt(dx * dx + dy * dy + dz * dz))
            if v == 0.0:
                continue
            vj, vk = var_of[j], var_of[k]
            if vj == vk:
                d1[vj] = d1.get(vj, 0.0) + 0.5 * v
            else:
                key = _key2(vj, vk, n_vars)
                d2[key] = d2.get(key, 0.0) + 0.5 * v
    if not with_triplets:
        return d1, d2, d3
    ptr, nbr = K.neighbours(positions, species, pair_rows)
    dij = np.empty(3)
    dik = np.empty(3)
    third = 1.0 / 3.0
    for j in range(n_orig):
        sj = species[j]
        # angles centred on j
        for a in range(ptr[j], ptr[j + 1]):
            k = nbr[a]
            for b in range(a + 1, ptr[j + 1]):
                l = nbr[b]
                for c in range(3):
                    dij[c] = positions[k, c] - positions[j, c]
                    dik[c] = positions[l, c] - positions[j, c]
                rij = np.sqrt(dij[0] ** 2 + dij[1] ** 2 + dij[2] ** 2)
                rik = np.sqrt(dik[0] ** 2 + dik[1] ** 2 + dik[2] ** 2)
                sk, sl = species[k], species[l]
                h = K.angle_value(trip_rows[sj, sk, sl], pair_rows[sj, sk], pair_rows[sj, sl], dij, dik, rij, rik)
                if h != 0.0:
                    _credit(d1, d2, d3, var_of[j], var_of[k], var_of[l], n_vars, third * h)
        # angles centred on a neighbour k with j as one leg
        for a in range(ptr[j], ptr[j + 1]):
            k = nbr[a]
            sk = species[k]
            for b in range(ptr[k], ptr[k + 1]):
                l = nbr[b]
                if l == j:
                    continue
                for c in range(3):
                    dij[c] = positions[j, c] - positions[k, c]
                    dik[c] = positions[l, c] - positions[k, c]
                rij = np.sqrt(dij[0] ** 2 + dij[1] ** 2 + dij[2] ** 2)
                rik = np.sqrt(dik[0] ** 2 + dik[1] ** 2 + dik[2] ** 2)
                sl = species[l]
                h = K.angle_value(trip_rows[sk, sj, sl], pair_rows[sk, sj], pair_rows[sk, sl], dij, dik, rij, rik)
                if h != 0.0:
                    _credit(d1, d2, d3, var_of[j], var_of[k], var_of[l], n_vars, third * h)
    return d1, d2, d3


def _unpack(d, order, n):
    keys = np.fromiter(d.keys(), dtype=np.int64, count=len(d))
    vals = np.fromiter(d.values(), dtype=np.float64, count=len(d))
    if order == 1:
        idx = keys[:, None]
    elif order == 2:
        idx = np.stack([keys // n, keys % n], axis=1)
    else:
        idx = np.stack([keys // (n * n), (keys // n) % n, keys % n], axis=1)
    return idx, vals


def variable_atoms(grid: SiteGrid, cell: UnitCell) -> AtomList:
    """One atom per variable: every site carrying every species at once."""
    pos = grid.frac_sites[grid.var_sites] @ cell.basis
    return AtomList(grid.var_species, pos, tuple(s.name for s in grid.species))


def _check(grid: SiteGrid, model: PotentialModel) -> None:
    if model.max_order > MAX_SUPPORTED_ORDER:
        raise NotImplementedError(f"potential order {model.max_order} > {MAX_SUPPORTED_ORDER} is not supported")
    for s in grid.species:
        model.species_index(s.name)


def _species_map(grid: SiteGrid, model: PotentialModel) -> np.ndarray:
    return np.array([model.species_index(s.name) for s in grid.species], dtype=np.int64)


def build_hubo(
    grid: SiteGrid,
    cell: UnitCell,
    model: PotentialModel,
    clamp: float | None = None,
    method: str = "direct",
) -> HuboPolynomial:
    """Polynomial whose value at any bitstring is the periodic energy of that configuration.

    With ``clamp`` set, every quadratic coefficient ``J`` is stored as
    ``min(J, clamp)`` and pairs of different species on one site get
    ``clamp`` outright.
    """
    _check(grid, model)
    if clamp is not None and not clamp > 0:
        raise ValueError(f"clamp must be positive, got {clamp}")
    if method == "direct":
        poly = _build_direct(grid, cell, model)
    elif method in ("inclusion-exclusion", "ie"):
        poly = _build_inclusion_exclusion(grid, cell, model)
    else:
        raise ValueError(f"unknown build method {method!r}")
    if clamp is not None:
        poly = clamp_pairs(poly, clamp, grid)
    return poly


def _build_direct(grid, cell, model) -> HuboPolynomial:
    atoms = variable_atoms(grid, cell)
    sc = make_supercell(cell, atoms, model.interaction_range)
    spc = _species_map(grid, model)[sc.species]
    d1, d2, d3 = _accumulate(
        model.kind_code,
        model._pair_rows,
        model._triplet_rows,
        np.ascontiguousarray(sc.positions),
        spc,
        sc.origin.astype(np.int64),
        grid.num_vars,
        grid.num_vars,
        3 in model.orders,
    )
    n = grid.num_vars
    idx, coef = {}, {}
    for order, d in ((1, d1), (2, d2), (3, d3)):
        if len(d):
            idx[order], coef[order] = _unpack(d, order, n)
    return HuboPolynomial(n, idx, coef, 0.0, grid.var_species, tuple(s.name for s in grid.species))


def min_image_distances(grid: SiteGrid, cell: UnitCell, cutoff: float) -> np.ndarray:
    """Site-to-site distances under the nearest periodic image, exact below ``cutoff``."""
    shifts = lattice_shifts(replication_radius(cell, cutoff)) @ cell.basis
    pos = grid.frac_sites @ cell.basis
    diff = pos[:, None, :] - pos[None, :, :]
    best = np.full((grid.n_sites, grid.n_sites), np.inf)
    for s in shifts:
        np.minimum(best, np.linalg.norm(diff + s, axis=2), out=best)
    return best


def candidate_tuples(grid: SiteGrid, cell: UnitCell, model: PotentialModel):
    """Variable tuples that can carry a nonzero coefficient.

    Pairs need their sites within the pair cutoff under the nearest image;
    triples need one member within cutoff of both others.
    """
    n = grid.num_vars
    site = grid.var_sites
    d = min_image_distances(grid, cell, model.cutoff)
    close = d[site][:, site] < model.cutoff
    out = [(v,) for v in range(n)]
    out += [(a, b) for a, b in itertools.combinations(range(n), 2) if close[a, b]]
    if 3 in model.orders:
        for t in itertools.combinations(range(n), 3):
            a, b, c = t
            if (close[a, b] and close[a, c]) or (close[b, a] and close[b, c]) or (close[c, a] and close[c, b]):
                out.append(t)
    return out


def _build_inclusion_exclusion(grid, cell, model) -> HuboPolynomial:
    n = grid.num_vars
    site, spc = grid.var_sites, grid.var_species
    names = tuple(s.name for s in grid.species)
    pos = grid.frac_sites @ cell.basis

    @lru_cache(maxsize=None)
    def energy(vars_: tuple[int, ...]) -> float:
        v = np.array(vars_, dtype=int)
        atoms = AtomList(spc[v], pos[site[v]], names)
        return energy_pbc(cell, atoms, model).total

    coef: dict[tuple[int, ...], float] = {}
    for t in candidate_tuples(grid, cell, model):
        value = energy(t)
        # cancellation noise grows with the subset energies (coincident atoms reach 1e4 eV)
        scale = abs(value)
        for r in range(1, len(t)):
            for z in itertools.combinations(t, r):
                value -= coef.get(z, 0.0)
                scale += abs(energy(z))
        if abs(value) > 1e-14 * scale:
            coef[t] = value
    return HuboPolynomial.from_terms(n, coef, var_species=grid.var_species, species_names=names)


def same_site_pairs(grid: SiteGrid) -> np.ndarray:
    """Variable pairs that put two different species on one site."""
    s = grid.n_sites
    out = []
    for a, b in itertools.combinations(range(grid.n_species), 2):
        sites = np.arange(s)
        out.append(np.stack([a * s + sites, b * s + sites], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


def clamp_pairs(poly: HuboPolynomial, clamp: float, grid: SiteGrid | None = None) -> HuboPolynomial:
    """Cap every quadratic coefficient at ``clamp``; co-located species pairs are set to it."""
    out = poly.copy()
    if 2 in out.coeffs:
        out.coeffs[2] = np.minimum(out.coeffs[2], clamp)
    if grid is not None and grid.n_species > 1:
        pairs = same_site_pairs(grid)
        present = poly.pair_matrix()[pairs[:, 0], pairs[:, 1]]
        out = out.with_terms(2, pairs, clamp - np.minimum(present, clamp))
    return out
