"""Potential models, the per-order energy oracle and periodic energies."""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..cell import AtomList, UnitCell, lattice_shifts, make_supercell, replication_radius
from . import _kernels as K

BUNDLED = {
    "kr_lj": "kr_lj_shifted.params",
    "mos2_sw": "mos2_sw.params",
}

LJ_KEYS = ("epsilon", "sigma", "cutoff")
SW_PAIR_KEYS = ("A", "B", "p", "q", "sigma", "cutoff")
SW_TRIPLET_KEYS = ("lambda", "gamma", "cos_theta0")


class ConfigurationError(ValueError):
    """Bad or incomplete potential parameters."""


@dataclass(frozen=True)
class EnergyBreakdown:
    per_order: dict[int, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.per_order.values()))

    def __float__(self) -> float:
        return self.total


def _pair_key(a: str, b: str) -> tuple[str, str]:
    return tuple(sorted((a, b)))


def _triplet_key(c: str, a: str, b: str) -> tuple[str, str, str]:
    return (c, *sorted((a, b)))


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """Immutable parameter table for one m-body potential with hard cutoffs.

    ``pair_params`` is keyed by sorted species-name pairs, ``triplet_params``
    by ``(centre, *sorted(legs))``.
    """

    kind: str
    species: tuple[str, ...]
    pair_params: dict
    triplet_params: dict = field(default_factory=dict)
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("LJ", "SW"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if not self.species:
            raise ConfigurationError("model lists no species")
        for a, b in itertools.combinations_with_replacement(self.species, 2):
            if _pair_key(a, b) not in self.pair_params:
                raise ConfigurationError(f"missing pair parameters for ({a}, {b})")
        rows = np.zeros((len(self.species),) * 2 + (6,))
        for (a, b), prm in self.pair_params.items():
            i, j = self.species_index(a), self.species_index(b)
            rows[i, j] = rows[j, i] = self._pair_row(prm)
        rows.setflags(write=False)
        object.__setattr__(self, "_pair_rows", rows)
        trows = np.zeros((len(self.species),) * 3 + (4,))
        for (c, a, b), prm in self.triplet_params.items():
            ic, ia, ib = (self.species_index(s) for s in (c, a, b))
            row = [prm["lambda"], prm["gamma"], prm["cos_theta0"], 1.0]
            trows[ic, ia, ib] = trows[ic, ib, ia] = row
        trows.setflags(write=False)
        object.__setattr__(self, "_triplet_rows", trows)

    def _pair_row(self, prm) -> np.ndarray:
        if self.kind == "LJ":
            eps, sig, rc = prm["epsilon"], prm["sigma"], prm["cutoff"]
            shift = 0.0
            if prm.get("shift", True):
                sr6 = (sig / rc) ** 6
                shift = 4.0 * eps * (sr6 * sr6 - sr6)
            return np.array([eps, sig, rc, shift, 0.0, rc])
        return np.array([prm[k] for k in SW_PAIR_KEYS], dtype=float)

    # -- metadata -------------------------------------------------------
    @property
    def orders(self) -> frozenset[int]:
        return frozenset({2, 3}) if self.triplet_params else frozenset({2})

    @property
    def max_order(self) -> int:
        return max(self.orders)

    @property
    def cutoff(self) -> float:
        return float(self._pair_rows[..., 5].max())

    @property
    def three_body_cutoff(self) -> float:
        """Longest leg that can carry a nonzero three-body term."""
        best = 0.0
        for c, a, b in self.triplet_params:
            for leg in (a, b):
                best = max(best, self.pair_params[_pair_key(c, leg)]["cutoff"])
        return best

    @property
    def interaction_range(self) -> float:
        """Largest separation between two atoms sharing a nonzero term."""
        return max(self.cutoff, 2.0 * self.three_body_cutoff)

    def pair_cutoff(self, a, b) -> float:
        return float(self._pair_rows[self._sid(a), self._sid(b), 5])

    def species_index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise ConfigurationError(f"species {name!r} not in model {self.species}") from None

    def _sid(self, s) -> int:
        return s if isinstance(s, (int, np.integer)) else self.species_index(s)

    def has_triplet(self, centre, a, b) -> bool:
        return bool(self._triplet_rows[self._sid(centre), self._sid(a), self._sid(b), 3])

    @property
    def kind_code(self) -> int:
        return K.KIND_LJ if self.kind == "LJ" else K.KIND_SW

    # -- plain-Python term evaluation (used by the oracle) ---------------
    def pair_energy(self, a, b, r: float) -> float:
        """Two-body term ``V_2`` for species ``a``, ``b`` at distance ``r``."""
        if r < 0:
            raise ValueError(f"negative distance {r}")
        row = self._pair_rows[self._sid(a), self._sid(b)]
        if r < K.ZERO_DISTANCE:
            return K.ZERO_DISTANCE_ENERGY
        if r >= row[5]:
            return 0.0
        if self.kind == "LJ":
            eps, sig, _, shift = row[:4]
            return 4.0 * eps * ((sig / r) ** 12 - (sig / r) ** 6) - shift
        A, B, p, q, sig, rc = row
        return A * (B * (sig / r) ** p - (sig / r) ** q) * math.exp(sig / (r - rc))

    def angle_energy(self, centre, a, b, x_centre, x_a, x_b) -> float:
        """Three-body term centred on ``x_centre`` with legs to ``x_a``, ``x_b``."""
        ic, ia, ib = self._sid(centre), self._sid(a), self._sid(b)
        trow = self._triplet_rows[ic, ia, ib]
        if trow[3] == 0.0:
            return 0.0
        u = np.asarray(x_a, float) - x_centre
        w = np.asarray(x_b, float) - x_centre
        ru, rw = float(np.linalg.norm(u)), float(np.linalg.norm(w))
        if ru < K.ZERO_DISTANCE or rw < K.ZERO_DISTANCE:
            return 0.0
        pu, pw = self._pair_rows[ic, ia], self._pair_rows[ic, ib]
        if ru >= pu[5] or rw >= pw[5]:
            return 0.0
        lam, gam, cos0 = trow[:3]
        cos = float(u @ w) / (ru * rw)
        return lam * math.exp(gam * pu[4] / (ru - pu[5]) + gam * pw[4] / (rw - pw[5])) * (cos - cos0) ** 2

    def triplet_energy(self, species3, positions3) -> float:
        """Symmetric ``V_3``: sum of the three angle terms of the triple."""
        s, x = list(species3), [np.asarray(p, float) for p in positions3]
        total = 0.0
        for c in range(3):
            a, b = [i for i in range(3) if i != c]
            total += self.angle_energy(s[c], s[a], s[b], x[c], x[a], x[b])
        return total

    # -- compiled local energies -----------------------------------------
    def local_energies(self, positions, species, n_orig) -> dict[int, np.ndarray]:
        """Per-order sum of terms touching each of the first ``n_orig`` atoms."""
        pos = np.ascontiguousarray(positions, dtype=float)
        spc = np.ascontiguousarray(species, dtype=np.int64)
        out = {2: K.local_pair_energies(self.kind_code, self._pair_rows, pos, spc, n_orig)}
        if 3 in self.orders:
            out[3] = K.local_triplet_energies(self._pair_rows, self._triplet_rows, pos, spc, n_orig)
        return out


def _parse_float(section, key, path):
    try:
        return float(section[key])
    except KeyError:
        raise ConfigurationError(f"{path}: [{section.name}] missing key {key!r}") from None
    except ValueError:
        raise ConfigurationError(f"{path}: [{section.name}] {key} is not a number: {section[key]!r}") from None


def load_model(path_or_name) -> PotentialModel:
    """Load a parameter file, or a bundled one by short name (``kr_lj``, ``mos2_sw``)."""
    if str(path_or_name) in BUNDLED:
        ref = resources.files("hubocsp.potentials") / "data" / BUNDLED[str(path_or_name)]
        text, source = ref.read_text(), str(path_or_name)
    else:
        p = Path(path_or_name)
        if not p.is_file():
            raise ConfigurationError(f"parameter file not found: {p}")
        text, source = p.read_text(), str(p)
    return parse_model(text, source)


def parse_model(text: str, source: str = "<string>") -> PotentialModel:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(str(exc)) from None
    if "model" not in cp:
        raise ConfigurationError(f"{source}: missing [model] section")
    kind = cp["model"].get("kind", "").strip().upper()
    species = tuple(cp["model"].get("species", "").split())
    pairs, triplets = {}, {}
    for name in cp.sections():
        parts = name.split()
        sec = cp[name]
        if parts[0] == "pair" and len(parts) == 3:
            keys = LJ_KEYS if kind == "LJ" else SW_PAIR_KEYS
            prm = {k: _parse_float(sec, k, source) for k in keys}
            if kind == "LJ":
                prm["shift"] = sec.getboolean("shift", fallback=True)
            if prm["cutoff"] <= 0:
                raise ConfigurationError(f"{source}: [{name}] cutoff must be positive")
            pairs[_pair_key(parts[1], parts[2])] = prm
        elif parts[0] == "triplet" and len(parts) == 4:
            triplets[_triplet_key(*parts[1:])] = {k: _parse_float(sec, k, source) for k in SW_TRIPLET_KEYS}
        elif name != "model":
            raise ConfigurationError(f"{source}: unrecognised section [{name}]")
    for key in [*pairs, *triplets]:
        for s in key:
            if s not in species:
                raise ConfigurationError(f"{source}: species {s!r} in {key} not listed in [model]")
    return PotentialModel(kind, species, pairs, triplets, source)


# -- energy oracle ------------------------------------------------------------


def _species_codes(atoms: AtomList, model: PotentialModel) -> np.ndarray:
    if atoms.species_names and tuple(atoms.species_names) != model.species:
        names = atoms.species_names
        return np.array([model.species_index(names[s]) for s in atoms.species], dtype=np.int64)
    if len(atoms) and atoms.species.max() >= len(model.species):
        raise ConfigurationError(f"atom species id out of range for model {model.species}")
    return atoms.species


def oracle_F(atoms: AtomList, order: int, model: PotentialModel) -> float:
    """Sum of ``V_order`` over all strictly increasing index tuples of ``atoms``."""
    if order not in (1, 2, 3):
        raise NotImplementedError(f"order {order} not implemented")
    if order not in model.orders:
        return 0.0
    spc = _species_codes(atoms, model)
    x = atoms.positions
    n = len(atoms)
    if order == 2:
        total = 0.0
        for i in range(n):
            d = np.linalg.norm(x[i + 1 :] - x[i], axis=1)
            for k, r in enumerate(d):
                total += model.pair_energy(spc[i], spc[i + 1 + k], float(r))
        return total
    # Triples whose every angle has a leg beyond cutoff are exactly zero,
    # so only triples with some atom bonded to the other two are visited.
    cut = model.cutoff
    nbrs = []
    for i in range(n):
        d = np.linalg.norm(x - x[i], axis=1)
        nbrs.append([k for k in np.nonzero(d < cut)[0] if k != i])
    triples = set()
    for i in range(n):
        for a, b in itertools.combinations(nbrs[i], 2):
            triples.add(tuple(sorted((i, a, b))))
    total = 0.0
    for t in sorted(triples):
        total += model.triplet_energy(spc[list(t)], x[list(t)])
    return total


def oracle_difference(atoms: AtomList, index: int, order: int, model: PotentialModel) -> float:
    """``F(atoms) - F(atoms without atom index)``: all terms touching that atom."""
    return oracle_F(atoms, order, model) - oracle_F(atoms.without(index), order, model)


class PeriodicEnergy:
    """Periodic energy of a fixed species list as a function of positions.

    The image translations are computed once, which makes repeated calls
    (finite-difference gradients, line searches) cheap.
    """

    def __init__(self, cell: UnitCell, species, model: PotentialModel):
        self.cell = cell
        self.model = model
        self.species = np.ascontiguousarray(species, dtype=np.int64)
        self.shifts = lattice_shifts(replication_radius(cell, model.interaction_range)) @ cell.basis
        self._sc_species = np.tile(self.species, len(self.shifts))

    def breakdown(self, positions) -> EnergyBreakdown:
        n = len(self.species)
        if n == 0:
            return EnergyBreakdown({m: 0.0 for m in sorted(self.model.orders)})
        pos = self.cell.wrap(np.asarray(positions, dtype=float).reshape(n, 3))
        sc = (pos[None, :, :] + self.shifts[:, None, :]).reshape(-1, 3)
        local = self.model.local_energies(sc, self._sc_species, n)
        return EnergyBreakdown({m: float(local[m].sum()) / m for m in sorted(self.model.orders)})

    def __call__(self, positions) -> float:
        return self.breakdown(positions).total


def energy_pbc(cell: UnitCell, atoms: AtomList, model: PotentialModel, method: str = "local") -> EnergyBreakdown:
    """Energy of one periodic cell.

    Each order contributes ``(1/l) sum_j [F_l(SC) - F_l(SC minus x_j)]`` over
    the atoms ``x_j`` of the cell, ``SC`` being the cell plus enough images
    to cover ``model.interaction_range``.

    ``method="local"`` sums the touching terms with compiled kernels;
    ``method="oracle"`` calls :func:`oracle_F` literally and is only
    practical for small cells.
    """
    if not len(atoms):
        return EnergyBreakdown({m: 0.0 for m in sorted(model.orders)})
    spc = _species_codes(atoms, model)
    if method == "local":
        return PeriodicEnergy(cell, spc, model).breakdown(atoms.positions)
    if method != "oracle":
        raise ValueError(f"unknown method {method!r}")
    atoms = AtomList(spc, cell.wrap(atoms.positions), model.species)
    sc = make_supercell(cell, atoms, model.interaction_range)
    per_order = {}
    for m in sorted(model.orders):
        f_all = oracle_F(sc, m, model)
        diff = sum(f_all - oracle_F(sc.without(j), m, model) for j in range(len(atoms)))
        per_order[m] = diff / m
    return EnergyBreakdown(per_order)
