import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hubocsp import systems
from hubocsp.cell import AtomList, make_supercell
from hubocsp.potentials import (
    ZERO_DISTANCE_ENERGY,
    ConfigurationError,
    energy_pbc,
    lj_pair,
    oracle_F,
    parse_model,
    sw_energy,
)


def image_sum_pairs(cell, atoms, model):
    """Half the sum over every atom pair and lattice image within cutoff."""
    rc = model.cutoff
    R = [int(np.ceil(rc / h)) if p else 0 for h, p in zip(cell.heights, cell.pbc)]
    names = atoms.species_names
    total = 0.0
    for n in itertools.product(*(range(-r, r + 1) for r in R)):
        L = np.array(n) @ cell.basis
        for i, j in itertools.product(range(len(atoms)), repeat=2):
            if i == j and not any(n):
                continue
            r = np.linalg.norm(atoms.positions[j] + L - atoms.positions[i])
            total += model.pair_energy(names[atoms.species[i]], names[atoms.species[j]], r)
    return total / 2


def image_sum_angles(cell, atoms, model):
    """Every angle centred on an atom of the cell, legs over all images."""
    sc = make_supercell(cell, atoms, model.interaction_range)
    names = atoms.species_names
    total = 0.0
    for c in range(len(atoms)):
        d = np.linalg.norm(sc.positions - atoms.positions[c], axis=1)
        legs = [k for k in np.nonzero(d < model.cutoff)[0] if k != c]
        for a, b in itertools.combinations(legs, 2):
            total += model.angle_energy(
                names[atoms.species[c]], names[sc.species[a]], names[sc.species[b]],
                atoms.positions[c], sc.positions[a], sc.positions[b],
            )
    return total


def test_lj_zero_at_and_beyond_cutoff(kr_model):
    rc = kr_model.cutoff
    assert lj_pair(rc, model=kr_model) == 0.0
    assert lj_pair(rc + 1.0, model=kr_model) == 0.0
    assert abs(lj_pair(rc - 1e-9, model=kr_model)) < 1e-9


def test_lj_coincident_sentinel(kr_model):
    assert lj_pair(0.0, model=kr_model) == ZERO_DISTANCE_ENERGY
    assert np.isfinite(lj_pair(0.0, model=kr_model))


def test_lj_minimum_position(kr_model):
    sigma = kr_model.pair_params[("Kr", "Kr")]["sigma"]
    r0 = 2 ** (1 / 6) * sigma
    h = 1e-5
    slope = (lj_pair(r0 + h, model=kr_model) - lj_pair(r0 - h, model=kr_model)) / (2 * h)
    assert abs(slope) < 1e-8


def test_sw_pair_vanishes_smoothly_at_cutoff(sw_model):
    rc = sw_model.pair_cutoff("Mo", "S")
    assert sw_model.pair_energy("Mo", "S", rc) == 0.0
    assert abs(sw_model.pair_energy("Mo", "S", rc - 1e-4)) < 1e-12


def test_sw_three_body_zero_without_angle_terms(sw_model):
    # Mo-centred Mo legs carry no angular term in this parametrisation
    x = np.array([[0, 0, 0], [3.0, 0, 0], [0, 3.0, 0.0]])
    assert sw_model.triplet_energy([0, 0, 0], x) == 0.0


def test_three_body_zero_length_leg_is_zero(sw_model):
    x = np.array([[0, 0, 0], [0, 0, 0], [2.4, 0, 0.0]])
    assert sw_model.angle_energy("Mo", "S", "S", x[0], x[1], x[2]) == 0.0


def test_kr_fcc_routes_agree(kr_model):
    cell, atoms = systems.kr_cell(), systems.kr_fcc()
    local = energy_pbc(cell, atoms, kr_model).total
    oracle = energy_pbc(cell, atoms, kr_model, method="oracle").total
    direct = image_sum_pairs(cell, atoms, kr_model)
    assert abs(local - oracle) < 1e-10
    assert abs(local - direct) < 1e-10


@pytest.mark.parametrize("maker", [systems.mos2_2h, systems.mos2_1t])
def test_mos2_routes_agree(sw_model, maker):
    cell, atoms = systems.mos2_cell(), maker()
    e = energy_pbc(cell, atoms, sw_model)
    assert abs(e.per_order[2] - image_sum_pairs(cell, atoms, sw_model)) < 1e-9
    assert abs(e.per_order[3] - image_sum_angles(cell, atoms, sw_model)) < 1e-9
    assert abs(e.total - energy_pbc(cell, atoms, sw_model, method="oracle").total) < 1e-9


def _random_atoms(seed, n, names=("Mo", "S")):
    rng = np.random.default_rng(seed)
    cell = systems.mos2_cell()
    frac = rng.random((n, 3))
    return cell, AtomList(rng.integers(0, len(names), n), frac @ cell.basis, names)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_permutation_invariance(sw_model, seed, n):
    cell, atoms = _random_atoms(seed, n)
    perm = np.random.default_rng(seed + 1).permutation(n)
    shuffled = AtomList(atoms.species[perm], atoms.positions[perm], atoms.species_names)
    assert abs(energy_pbc(cell, atoms, sw_model).total - energy_pbc(cell, shuffled, sw_model).total) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.floats(-20, 20), st.floats(-20, 20))
def test_in_plane_translation_invariance(sw_model, seed, n, dx, dy):
    cell, atoms = _random_atoms(seed, n)
    moved = AtomList(atoms.species, atoms.positions + [dx, dy, 0.0], atoms.species_names)
    assert abs(energy_pbc(cell, atoms, sw_model).total - energy_pbc(cell, moved, sw_model).total) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 2))
def test_supercell_shell_invariance(sw_model, seed, n, extra):
    cell, atoms = _random_atoms(seed, n)
    spc = atoms.species
    sc = make_supercell(cell, atoms, sw_model.interaction_range, extra_shells=extra)
    local = sw_model.local_energies(sc.positions, sc.species, n)
    bigger = sum(float(local[m].sum()) / m for m in local)
    assert abs(bigger - energy_pbc(cell, AtomList(spc, atoms.positions, atoms.species_names), sw_model).total) < 1e-9


def test_oracle_F_cluster_matches_sw_energy(sw_model):
    _, atoms = _random_atoms(7, 6)
    e = sw_energy(atoms, sw_model)
    assert abs(e.per_order[2] - oracle_F(atoms, 2, sw_model)) < 1e-9
    assert abs(e.per_order[3] - oracle_F(atoms, 3, sw_model)) < 1e-9


def test_oracle_order_four_unimplemented(sw_model):
    with pytest.raises(NotImplementedError):
        oracle_F(systems.mos2_2h(), 4, sw_model)


def test_empty_cell_energy_zero(kr_model):
    assert energy_pbc(systems.kr_cell(), systems.kr_fcc().subset(np.zeros(4, bool)), kr_model).total == 0.0


def test_parse_model_errors_name_location():
    with pytest.raises(ConfigurationError, match="epsilon"):
        parse_model("[model]\nkind = LJ\nspecies = Ar\n[pair Ar Ar]\nsigma = 3.4\ncutoff = 8\n")
    with pytest.raises(ConfigurationError):
        parse_model("[model]\nkind = XX\nspecies = Ar\n")


def test_parse_model_custom_lj():
    m = parse_model("[model]\nkind = LJ\nspecies = Ar\n[pair Ar Ar]\nepsilon = 0.01\nsigma = 3.4\ncutoff = 8.5\nshift = false\n")
    assert m.max_order == 2
    r = 2 ** (1 / 6) * 3.4
    assert abs(m.pair_energy("Ar", "Ar", r) + 0.01) < 1e-12
