"""Off-grid relaxation of annealing outputs and classification of the minima."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cell import AtomList, UnitCell, decode
from .potentials import PeriodicEnergy, PotentialModel, energy_pbc

__all__ = [
    "decode",
    "RelaxResult",
    "MinimaEntry",
    "MinimaCatalog",
    "bfgs_relax",
    "fd_gradient",
    "classify",
    "kr_catalog",
    "mos2_catalog",
]

FD_STEP = 1e-5
ARMIJO_C1 = 1e-4
# Largest displacement of any coordinate in one line-search trial (Angstrom).
MAX_STEP = 0.3


@dataclass
class RelaxResult:
    atoms: AtomList
    initial_energy: float
    final_energy: float
    iterations: int
    converged: bool
    grad_norm: float
    message: str = ""
    energies: list[float] = field(default_factory=list)


def fd_gradient(func, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of ``func`` at ``x``."""
    g = np.empty_like(x)
    xp = x.copy()
    for i in range(len(x)):
        xp[i] = x[i] + h
        fp = func(xp)
        xp[i] = x[i] - h
        fm = func(xp)
        xp[i] = x[i]
        g[i] = (fp - fm) / (2 * h)
    return g


def bfgs_relax(
    atoms: AtomList,
    cell: UnitCell,
    model: PotentialModel,
    tol_grad: float = 1e-6,
    max_iter: int = 500,
    fd_step: float = FD_STEP,
    rattle: float = 0.0,
    seed=None,
) -> RelaxResult:
    """Quasi-Newton descent of the periodic energy over Cartesian coordinates.

    Armijo backtracking along the BFGS direction; the inverse-Hessian
    estimate goes back to the identity whenever ``s.y <= 0``.  Composition
    and cell are fixed.  Positions are wrapped into the cell on return.

    Grid configurations are often symmetric saddle points with an exactly
    zero gradient; ``rattle > 0`` adds Gaussian noise of that size (Angstrom,
    drawn from ``seed``) to the start so the descent can leave them.
    """
    n = len(atoms)
    spc = np.array([model.species_index(atoms.species_names[s]) for s in atoms.species]) if atoms.species_names else atoms.species
    energy = PeriodicEnergy(cell, spc, model)
    x = cell.wrap(atoms.positions).reshape(-1).copy()
    if rattle > 0:
        x += np.random.default_rng(seed).normal(0.0, rattle, x.shape)
    f = energy(x)
    history = [f]

    def finish(x, f, it, conv, gnorm, msg=""):
        pos = cell.wrap(x.reshape(n, 3))
        out = AtomList(atoms.species, pos, atoms.species_names)
        return RelaxResult(out, history[0], float(f), it, conv, float(gnorm), msg, history)

    if n == 0:
        return finish(x, f, 0, True, 0.0)
    if not np.isfinite(f):
        return finish(x, f, 0, False, np.inf, "non-finite initial energy")
    g = fd_gradient(energy, x, fd_step)
    H = np.eye(len(x))
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol_grad:
            return finish(x, f, it, True, gnorm)
        p = -H @ g
        if p @ g >= 0:
            H = np.eye(len(x))
            p = -g
        scale = np.abs(p).max()
        alpha = min(1.0, MAX_STEP / scale) if scale > 0 else 1.0
        slope = float(p @ g)
        while True:
            x_new = x + alpha * p
            f_new = energy(x_new)
            if not np.isfinite(f_new):
                return finish(x, f, it, False, gnorm, "non-finite energy in line search")
            if f_new <= f + ARMIJO_C1 * alpha * slope:
                break
            alpha *= 0.5
            if alpha * scale < 1e-14:
                # no descent possible at this resolution: the gradient is numerical noise
                return finish(x, f, it, gnorm <= 10 * tol_grad, gnorm, "line search stalled")
        g_new = fd_gradient(energy, x_new, fd_step)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-16:
            if it == 0:
                H = np.eye(len(x)) * (sy / float(y @ y))
            rho = 1.0 / sy
            I = np.eye(len(x))
            H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) + rho * np.outer(s, s)
        else:
            H = np.eye(len(x))
        x, f, g = x_new, f_new, g_new
        history.append(f)
    gnorm = float(np.linalg.norm(g))
    return finish(x, f, max_iter, gnorm <= tol_grad, gnorm, "max_iter reached")


# -- catalog --------------------------------------------------------------------


@dataclass(frozen=True)
class MinimaEntry:
    """A named minimum: composition plus an energy point or band (eV)."""

    name: str
    composition: tuple[int, ...]
    energy: float | None = None
    band: tuple[float, float] | None = None

    def matches(self, composition, energy: float, tol: float) -> bool:
        if tuple(composition) != tuple(self.composition):
            return False
        if self.band is not None:
            return self.band[0] <= energy <= self.band[1]
        return abs(energy - self.energy) <= tol

    def distance(self, energy: float) -> float:
        if self.band is not None:
            lo, hi = self.band
            return 0.0 if lo <= energy <= hi else min(abs(energy - lo), abs(energy - hi))
        return abs(energy - self.energy)


class MinimaCatalog:
    def __init__(self, entries=(), ground_state: str | None = None):
        self.entries: list[MinimaEntry] = []
        self.ground_state = ground_state
        for e in entries:
            self.add(e)

    def add(self, entry: MinimaEntry) -> None:
        if any(e.name == entry.name for e in self.entries):
            raise ValueError(f"duplicate catalog entry {entry.name!r}")
        self.entries.append(entry)

    def __getitem__(self, name: str) -> MinimaEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __len__(self):
        return len(self.entries)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def ground_energy(self) -> float:
        return self[self.ground_state].energy


def classify(result, catalog: MinimaCatalog, energy_tol: float = 1e-3, n_species: int | None = None) -> str:
    """Name of the nearest catalog entry with the same composition within tolerance."""
    if not len(catalog):
        raise ValueError("empty catalog")
    if isinstance(result, RelaxResult):
        atoms, energy = result.atoms, result.final_energy
    else:
        atoms, energy = result
    n_sp = n_species or len(catalog.entries[0].composition)
    comp = atoms.composition(n_sp)
    hits = [e for e in catalog.entries if e.matches(comp, energy, energy_tol)]
    if not hits:
        return "unclassified"
    return min(hits, key=lambda e: e.distance(energy)).name


def kr_catalog(model: PotentialModel) -> MinimaCatalog:
    from . import systems

    cell = systems.kr_cell()
    fcc = energy_pbc(cell, systems.kr_fcc(), model).total
    vac = energy_pbc(cell, systems.kr_fcc_vacancy(), model).total
    return MinimaCatalog([MinimaEntry("FCC", (4,), fcc), MinimaEntry("FCC-1", (3,), vac)], ground_state="FCC")


# Residuals of minima with no reference coordinates, relative to 2H (eV).
ORTHORHOMBIC_RESIDUAL = -0.9313
MO5S10_BAND = (-np.inf, -2.5)


def mos2_catalog(model: PotentialModel, orthorhombic_tol: float = 2e-3) -> MinimaCatalog:
    from . import systems

    cell = systems.mos2_cell()
    e2h = energy_pbc(cell, systems.mos2_2h(), model).total
    e1t = energy_pbc(cell, systems.mos2_1t(), model).total
    ortho = e2h + ORTHORHOMBIC_RESIDUAL
    return MinimaCatalog(
        [
            MinimaEntry("2H", (4, 8), e2h),
            MinimaEntry("1T", (4, 8), e1t),
            MinimaEntry("orthorhombic", (4, 8), band=(ortho - orthorhombic_tol, ortho + orthorhombic_tol)),
            MinimaEntry("Mo5S10", (5, 10), band=(e2h + MO5S10_BAND[0], e2h + MO5S10_BAND[1])),
        ],
        ground_state="2H",
    )
