import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_bitstrings
from hubocsp import systems
from hubocsp.cell import decode
from hubocsp.hubo import (
    HuboPolynomial,
    PenaltySpec,
    PolynomialFormatError,
    add_absolute_penalty,
    add_penalty,
    add_relative_penalty,
    build_hubo,
    clamp_pairs,
    deduc_reduc,
    evaluate,
    evaluate_many,
    export_poly,
    import_poly,
)
from hubocsp.potentials import energy_pbc


def naive_value(terms, offset, bits):
    return offset + sum(c for t, c in terms.items() if all(bits[i] for i in t))


def random_poly(seed, n=6, order=3, n_terms=20, species=None):
    rng = np.random.default_rng(seed)
    terms = {}
    for _ in range(n_terms):
        k = int(rng.integers(1, order + 1))
        terms[tuple(sorted(rng.choice(n, k, replace=False).tolist()))] = float(rng.normal())
    return HuboPolynomial.from_terms(n, terms, float(rng.normal()), var_species=species), terms


# -- polynomial basics ----------------------------------------------------------


def test_all_zeros_gives_offset():
    p, _ = random_poly(1)
    assert evaluate(p, np.zeros(6, int)) == p.offset


def test_single_linear_term():
    p = HuboPolynomial.from_terms(3, {(1,): 2.5}, offset=1.0)
    assert evaluate(p, [0, 1, 0]) == 3.5


def test_repeated_variables_absorbed_and_zeros_dropped():
    p = HuboPolynomial.from_terms(4, {(2, 1, 2): 1.0, (0, 3): 0.0, (3, 0): 1e-14})
    assert p.terms == {(1, 2): 1.0}


def test_length_mismatch():
    p, _ = random_poly(2)
    with pytest.raises(ValueError):
        evaluate(p, [0, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 1), min_size=6, max_size=6))
def test_evaluate_matches_naive(seed, bits):
    p, terms = random_poly(seed)
    merged = {}
    for t, c in terms.items():
        merged[t] = merged.get(t, 0.0) + c
    assert abs(evaluate(p, bits) - naive_value(merged, p.offset, bits)) < 1e-12


def test_evaluate_many():
    p, _ = random_poly(3)
    B = all_bitstrings(6)
    np.testing.assert_allclose(evaluate_many(p, B), [evaluate(p, b) for b in B])


def test_export_import_round_trip(tmp_path):
    p, _ = random_poly(4, n=8, n_terms=40)
    f = tmp_path / "p.poly"
    export_poly(p, f)
    q = import_poly(f)
    assert q.num_vars == p.num_vars and q.offset == p.offset
    assert q.terms == p.terms


def test_empty_polynomial_header_only(tmp_path):
    f = tmp_path / "e.poly"
    export_poly(HuboPolynomial(5), f)
    assert f.read_text().splitlines() == ["#vars 5", "#offset 0.0"]
    assert len(import_poly(f)) == 0


def test_import_duplicates_summed_with_warning(tmp_path):
    f = tmp_path / "d.poly"
    f.write_text("#vars 3\n#offset 0.5\n0 1 1.25\n2 -1.0\n0 1 0.75\n")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        p = import_poly(f)
    assert any("duplicate" in str(x.message) for x in w)
    assert p.coefficient((0, 1)) == 2.0
    assert p.offset == 0.5


@pytest.mark.parametrize(
    "text, line",
    [
        ("#vars 3\n0 1 x\n", 2),
        ("#vars 3\n1 0 1.0\n", 2),
        ("#vars 3\n0 5 1.0\n", 2),
        ("0 1 1.0\n", 1),
        ("#vars 3\n#offset abc\n", 2),
    ],
)
def test_import_errors_carry_line_numbers(tmp_path, text, line):
    f = tmp_path / "bad.poly"
    f.write_text(text)
    with pytest.raises(PolynomialFormatError, match=f":{line}:"):
        import_poly(f)


# -- build ----------------------------------------------------------------------


def test_linear_coefficient_is_self_image_energy(kr_model):
    grid, cell = systems.kr_grid(2), systems.kr_cell()
    p = build_hubo(grid, cell, kr_model)
    b = np.zeros(grid.num_vars, int)
    b[3] = 1
    assert abs(p.linear()[3] - energy_pbc(cell, decode(b, grid, cell), kr_model).total) < 1e-12


def test_pair_coefficient_inclusion_exclusion(kr_poly_g2, kr_model):
    grid, cell = systems.kr_grid(2), systems.kr_cell()

    def E(vs):
        b = np.zeros(grid.num_vars, int)
        b[list(vs)] = 1
        return energy_pbc(cell, decode(b, grid, cell), kr_model).total

    for i, j in [(0, 1), (0, 7), (2, 5)]:
        assert abs(kr_poly_g2.pair_matrix()[i, j] - (E((i, j)) - E((i,)) - E((j,)))) < 1e-10


def test_cubic_coefficients_inclusion_exclusion(mos2_poly_g2, sw_model):
    grid, cell = systems.mos2_grid(2), systems.mos2_cell()

    def E(vs):
        b = np.zeros(grid.num_vars, int)
        b[list(vs)] = 1
        return energy_pbc(cell, decode(b, grid, cell), sw_model).total

    rng = np.random.default_rng(0)
    idx = mos2_poly_g2.indices[3]
    J = mos2_poly_g2.pair_matrix()
    for row in idx[rng.choice(len(idx), 15, replace=False)]:
        i, j, k = row.tolist()
        sub = E((i,)) + E((j,)) + E((k,)) + J[i, j] + J[i, k] + J[j, k]
        assert abs(mos2_poly_g2.coefficient((i, j, k)) - (E((i, j, k)) - sub)) < 1e-9


@pytest.mark.parametrize("g", [2, 3])
def test_kr_direct_equals_inclusion_exclusion(kr_model, g):
    grid, cell = systems.kr_grid(g), systems.kr_cell()
    a = build_hubo(grid, cell, kr_model)
    b = build_hubo(grid, cell, kr_model, method="ie")
    assert a.counts() == b.counts()
    for k in a.orders:
        np.testing.assert_array_equal(a.indices[k], b.indices[k])
        np.testing.assert_allclose(a.coeffs[k], b.coeffs[k], atol=1e-10)


@pytest.mark.slow
def test_mos2_direct_equals_inclusion_exclusion(mos2_poly_g2, sw_model):
    b = build_hubo(systems.mos2_grid(2), systems.mos2_cell(), sw_model, method="ie")
    assert mos2_poly_g2.counts() == b.counts()
    for k in b.orders:
        np.testing.assert_array_equal(mos2_poly_g2.indices[k], b.indices[k])
        np.testing.assert_allclose(mos2_poly_g2.coeffs[k], b.coeffs[k], atol=1e-9)


def test_kr_g4_fully_connected(kr_model):
    grid = systems.kr_grid(4)
    p = build_hubo(grid, systems.kr_cell(), kr_model)
    n = grid.num_vars
    assert p.count(2) == n * (n - 1) // 2


def test_order_four_model_rejected(kr_model):
    class FourBody(type(kr_model)):
        max_order = property(lambda self: 4)
        orders = property(lambda self: frozenset({2, 4}))

    model = FourBody(kr_model.kind, kr_model.species, kr_model.pair_params, kr_model.triplet_params)
    with pytest.raises(NotImplementedError):
        build_hubo(systems.kr_grid(2), systems.kr_cell(), model)


def test_unknown_build_method(kr_model):
    with pytest.raises(ValueError):
        build_hubo(systems.kr_grid(2), systems.kr_cell(), kr_model, method="nope")


def test_clamp_caps_pairs_and_marks_same_site(mos2_poly_g2):
    grid = systems.mos2_grid(2)
    c = clamp_pairs(mos2_poly_g2, 1.0, grid)
    assert c.coeffs[2].max() <= 1.0 + 1e-15
    J = c.pair_matrix()
    for s in range(grid.n_sites):
        assert J[grid.var_index(s, 0), grid.var_index(s, 1)] == 1.0


def test_kr_clamping_keeps_argmin(kr_model):
    grid, cell = systems.kr_grid(2), systems.kr_cell()
    raw = build_hubo(grid, cell, kr_model)
    clamped = build_hubo(grid, cell, kr_model, clamp=1.0)
    B = all_bitstrings(grid.num_vars)
    a, b = evaluate_many(raw, B), evaluate_many(clamped, B)
    assert np.argmin(a) == np.argmin(b)


# -- penalties ------------------------------------------------------------------


def species_poly(n_per=6, n_species=2):
    vs = np.repeat(np.arange(n_species), n_per)
    return HuboPolynomial(n_per * n_species, var_species=vs, species_names=("Mo", "S")[:n_species])


def test_absolute_penalty_expansion():
    p = HuboPolynomial(64, var_species=np.zeros(64, int), species_names=("Kr",))
    q = add_absolute_penalty(p, PenaltySpec("absolute", 1.0, targets={"Kr": 4}))
    assert q.offset == 16
    assert np.all(q.linear() == -7)
    assert q.count(2) == 64 * 63 // 2 and np.all(q.coeffs[2] == 2)
    b = np.zeros(64, int)
    b[:4] = 1
    assert evaluate(q, b) == 0
    b[4] = 1
    assert evaluate(q, b) == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=12, max_size=12), st.integers(0, 6), st.integers(0, 6))
def test_absolute_penalty_zero_set(bits, c_mo, c_s):
    spec = PenaltySpec("absolute", 3.0, targets={"Mo": c_mo, "S": c_s})
    q = add_penalty(species_poly(), spec)
    b = np.array(bits)
    counts = {"Mo": int(b[:6].sum()), "S": int(b[6:].sum())}
    v = evaluate(q, b)
    assert abs(v - spec.value(counts)) < 1e-9
    assert (abs(v) < 1e-9) == (counts["Mo"] == c_mo and counts["S"] == c_s)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=12, max_size=12))
def test_relative_penalty_zero_set(bits):
    spec = PenaltySpec("relative", 10.0, pair=("Mo", "S"), ratio=0.5)
    q = add_relative_penalty(species_poly(), spec)
    b = np.array(bits)
    n_mo, n_s = int(b[:6].sum()), int(b[6:].sum())
    v = evaluate(q, b)
    assert abs(v - 10 * (n_mo - 0.5 * n_s) ** 2) < 1e-9
    assert (abs(v) < 1e-9) == (2 * n_mo == n_s)


def test_relative_penalty_examples():
    spec = PenaltySpec("relative", 10.0, pair=("Mo", "S"), ratio=0.5)
    assert spec.value({"Mo": 4, "S": 8}) == 0
    assert spec.value({"Mo": 5, "S": 10}) == 0
    assert spec.value({"Mo": 4, "S": 7}) == 2.5


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="other", strength=1.0),
        dict(kind="absolute", strength=0.0, targets={"Mo": 1}),
        dict(kind="absolute", strength=1.0),
        dict(kind="relative", strength=1.0, pair=("Mo",)),
        dict(kind="relative", strength=1.0, pair=("Mo", "S"), ratio=0.0),
    ],
)
def test_penalty_spec_validation(kwargs):
    with pytest.raises(ValueError):
        PenaltySpec(**kwargs)


def test_penalty_unknown_species():
    with pytest.raises(ValueError):
        add_penalty(species_poly(), PenaltySpec("absolute", 1.0, targets={"W": 1}))


# -- deduc-reduc ----------------------------------------------------------------


def test_deduc_reduc_rule():
    p = HuboPolynomial.from_terms(4, {(0, 1): 25.0, (0, 1, 2): 3.0, (1, 2, 3): -1.0, (0, 2): 2.0})
    q, rep = deduc_reduc(p, 10.0)
    assert q.coefficient((0, 1)) == 10.0
    assert q.coefficient((0, 1, 2)) == 0.0
    assert q.coefficient((1, 2, 3)) == -1.0
    assert rep.pairs_clamped == 1 and rep.removed[3] == 1
    assert rep.counts_after == q.counts()


def test_deduc_reduc_infinite_threshold_is_identity(mos2_poly_g2):
    q, rep = deduc_reduc(mos2_poly_g2, np.inf)
    assert q.terms == mos2_poly_g2.terms
    assert rep.pairs_clamped == 0 and all(v == 0 for v in rep.removed.values())


def test_deduc_reduc_rejects_nonpositive():
    with pytest.raises(ValueError):
        deduc_reduc(HuboPolynomial(2), 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_deduc_reduc_keeps_argmin_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 10
    terms = {}
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < 0.5:
            terms[(i, j)] = float(rng.normal(0, 2)) if rng.random() < 0.8 else float(rng.uniform(20, 50))
    for t in itertools.combinations(range(n), 3):
        if rng.random() < 0.2:
            terms[t] = float(rng.normal(0, 1))
    for i in range(n):
        terms[(i,)] = float(rng.normal(-1, 1))
    p = HuboPolynomial.from_terms(n, terms)
    B = all_bitstrings(n)
    e = evaluate_many(p, B)
    best = B[np.argmin(e)]
    on = np.flatnonzero(best)
    J = p.pair_matrix()
    needed = max([J[i, j] for i, j in itertools.combinations(on, 2)] + [0.0])
    T = max(needed, 10.0) + 1e-9
    q, _ = deduc_reduc(p, T)
    eq = evaluate_many(q, B)
    assert np.argmin(eq) == np.argmin(e)
