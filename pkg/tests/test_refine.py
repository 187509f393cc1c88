import numpy as np
import pytest

from hubocsp import systems
from hubocsp.cell import AtomList, UnitCell
from hubocsp.potentials import PeriodicEnergy, energy_pbc
from hubocsp.refine import (
    MinimaCatalog,
    MinimaEntry,
    RelaxResult,
    bfgs_relax,
    classify,
    fd_gradient,
    kr_catalog,
    mos2_catalog,
)


def open_box():
    return UnitCell(np.eye(3) * 30.0, (False, False, False))


def dimer(r):
    return AtomList([0, 0], [[10.0, 10.0, 10.0], [10.0 + r, 10.0, 10.0]], ("Kr",))


def test_relaxed_dimer_is_left_alone(kr_model):
    sigma = kr_model.pair_params[("Kr", "Kr")]["sigma"]
    atoms = dimer(2 ** (1 / 6) * sigma)
    res = bfgs_relax(atoms, open_box(), kr_model)
    assert res.iterations == 0 and res.converged
    np.testing.assert_allclose(res.atoms.positions, atoms.positions, atol=1e-6)


def test_stretched_dimer_relaxes_to_minimum(kr_model):
    sigma = kr_model.pair_params[("Kr", "Kr")]["sigma"]
    res = bfgs_relax(dimer(4.6), open_box(), kr_model)
    r = np.linalg.norm(res.atoms.positions[1] - res.atoms.positions[0])
    assert res.converged
    assert abs(r - 2 ** (1 / 6) * sigma) < 1e-4
    assert abs(res.final_energy - kr_model.pair_energy("Kr", "Kr", 2 ** (1 / 6) * sigma)) < 1e-9


def test_fd_gradient_second_order(kr_model):
    rc = kr_model.cutoff
    eps = kr_model.pair_params[("Kr", "Kr")]["epsilon"]
    sig = kr_model.pair_params[("Kr", "Kr")]["sigma"]
    x0 = 4.3

    def analytic(r):
        return 4 * eps * (-12 * sig**12 / r**13 + 6 * sig**6 / r**7)

    f = lambda x: kr_model.pair_energy("Kr", "Kr", float(x[0]))
    assert x0 < rc
    err1 = abs(fd_gradient(f, np.array([x0]), 1e-2)[0] - analytic(x0))
    err2 = abs(fd_gradient(f, np.array([x0]), 5e-3)[0] - analytic(x0))
    assert 3.5 < err1 / err2 < 4.5


def test_perturbed_fcc_returns(kr_model):
    cell = systems.kr_cell()
    e0 = energy_pbc(cell, systems.kr_fcc(), kr_model).total
    rng = np.random.default_rng(4)
    for _ in range(3):
        atoms = systems.kr_fcc()
        atoms = AtomList(atoms.species, atoms.positions + rng.uniform(-0.1, 0.1, (4, 3)), atoms.species_names)
        res = bfgs_relax(atoms, cell, kr_model)
        assert abs(res.final_energy - e0) < 1e-4
        assert res.final_energy <= res.initial_energy + 1e-8
        assert np.all(np.diff(res.energies) <= 1e-12)
        if res.converged:
            assert res.grad_norm <= 1e-6 * 10


def test_relaxation_translation_invariant(kr_model):
    cell = systems.kr_cell()
    rng = np.random.default_rng(9)
    atoms = systems.kr_fcc()
    atoms = AtomList(atoms.species, atoms.positions + rng.uniform(-0.1, 0.1, (4, 3)), atoms.species_names)
    moved = AtomList(atoms.species, atoms.positions + cell.basis[0] - cell.basis[2], atoms.species_names)
    a = bfgs_relax(atoms, cell, kr_model)
    b = bfgs_relax(moved, cell, kr_model)
    assert abs(a.final_energy - b.final_energy) < 1e-6


def test_rattle_escapes_symmetric_saddle(kr_model):
    grid, cell = systems.kr_grid(4), systems.kr_cell()
    # four atoms on one cube face: a zero-gradient grid state above FCC
    frac = np.array([[0, 0, 0], [0.5, 0, 0], [0, 0.5, 0], [0.5, 0.5, 0]])
    atoms = AtomList([0] * 4, frac @ cell.basis, ("Kr",))
    e_fcc = energy_pbc(cell, systems.kr_fcc(), kr_model).total
    still = bfgs_relax(atoms, cell, kr_model)
    assert still.final_energy > e_fcc + 1e-3
    res = bfgs_relax(atoms, cell, kr_model, rattle=1e-3, seed=0)
    assert abs(res.final_energy - e_fcc) < 1e-4


def test_positions_wrapped(kr_model):
    cell = systems.kr_cell()
    atoms = systems.kr_fcc()
    shifted = AtomList(atoms.species, atoms.positions - 0.3, atoms.species_names)
    res = bfgs_relax(shifted, cell, kr_model, max_iter=3)
    f = cell.to_fractional(res.atoms.positions)
    assert np.all((f >= 0) & (f < 1))


def test_empty_structure(kr_model):
    res = bfgs_relax(AtomList([], np.zeros((0, 3)), ("Kr",)), systems.kr_cell(), kr_model)
    assert res.converged and res.final_energy == 0.0


def test_catalog_names_unique():
    cat = MinimaCatalog([MinimaEntry("A", (1,), 0.0)])
    with pytest.raises(ValueError):
        cat.add(MinimaEntry("A", (1,), 1.0))


def test_classify_points_and_bands(sw_model):
    cat = mos2_catalog(sw_model)
    e2h = cat["2H"].energy
    e1t = cat["1T"].energy
    mo4s8 = systems.mos2_2h()
    assert classify((mo4s8, e2h), cat) == "2H"
    assert classify((mo4s8, e1t), cat) == "1T"
    assert classify((mo4s8, e2h - 0.9313), cat) == "orthorhombic"
    assert classify((mo4s8, e2h + 0.5), cat) == "unclassified"
    mo5s10 = AtomList([0] * 5 + [1] * 10, np.zeros((15, 3)), ("Mo", "S"))
    assert classify((mo5s10, e2h - 3.0), cat) == "Mo5S10"
    assert classify((mo5s10, e2h), cat) == "unclassified"


def test_kr_catalog(kr_model):
    cat = kr_catalog(kr_model)
    assert cat.ground_state == "FCC"
    assert abs(cat.ground_energy + 0.431) < 1e-3
    res = RelaxResult(systems.kr_fcc(), 0.0, cat.ground_energy, 0, True, 0.0)
    assert classify(res, cat) == "FCC"


def test_empty_catalog():
    with pytest.raises(ValueError):
        classify((systems.kr_fcc(), 0.0), MinimaCatalog())


def test_periodic_energy_callable_matches(kr_model):
    cell = systems.kr_cell()
    atoms = systems.kr_fcc()
    pe = PeriodicEnergy(cell, atoms.species, kr_model)
    assert abs(pe(atoms.positions.reshape(-1)) - energy_pbc(cell, atoms, kr_model).total) < 1e-12
