import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hubocsp import systems
from hubocsp.estimators import SimulatedAnnealer, StructureRelaxer
from hubocsp.hubo import evaluate


def test_annealer_params_and_clone():
    est = SimulatedAnnealer(n_steps=12, n_runs=3)
    assert est.get_params()["n_steps"] == 12
    assert clone(est).get_params() == est.get_params()


def test_annealer_fit(kr_poly_g2):
    est = SimulatedAnnealer(n_runs=4, n_steps=10).fit(kr_poly_g2)
    assert len(est.results_) == 4
    assert est.best_energy_ == est.energies_.min()
    assert abs(evaluate(kr_poly_g2, est.predict()) - est.best_energy_) < 1e-12
    assert est.score(est.best_energy_) > 0


def test_annealer_not_fitted():
    with pytest.raises(NotFittedError):
        SimulatedAnnealer().predict()


def test_relaxer_transform(kr_model):
    cell = systems.kr_cell()
    atoms = systems.kr_fcc()
    moved = type(atoms)(atoms.species, atoms.positions + 0.05, atoms.species_names)
    out = StructureRelaxer(cell=cell, model=kr_model).fit_transform([moved])
    assert abs(out[0].final_energy + 0.431) < 1e-3


def test_relaxer_needs_model():
    with pytest.raises(ValueError):
        StructureRelaxer().fit()
