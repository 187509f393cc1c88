"""scikit-learn style wrappers around the annealer and the relaxer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .anneal import AnnealSchedule, run_batch
from .bench import ground_state_prob
from .hubo import evaluate
from .refine import bfgs_relax


class SimulatedAnnealer(BaseEstimator):
    """Batch annealer.  ``fit(poly)`` runs the batch; results land in ``results_``."""

    def __init__(self, t_max=1e-2, t_min=1e-4, n_steps=30, n_runs=100, master_seed=0, parallelism=1, exchanges=True):
        self.t_max = t_max
        self.t_min = t_min
        self.n_steps = n_steps
        self.n_runs = n_runs
        self.master_seed = master_seed
        self.parallelism = parallelism
        self.exchanges = exchanges

    def fit(self, poly, y=None):
        schedule = AnnealSchedule(self.t_max, self.t_min, self.n_steps)
        self.results_ = run_batch(poly, schedule, self.n_runs, self.master_seed, self.parallelism, self.exchanges)
        self.energies_ = np.array([r.energy for r in self.results_])
        best = int(np.argmin(self.energies_))
        self.best_bits_ = self.results_[best].bits.copy()
        self.best_energy_ = float(self.energies_[best])
        self.num_vars_ = poly.num_vars
        return self

    def _check_fitted(self):
        if not hasattr(self, "results_"):
            raise NotFittedError("call fit with a polynomial first")

    def predict(self, poly=None):
        """Lowest-energy bitstring found."""
        self._check_fitted()
        return self.best_bits_.copy()

    def score(self, gs_energy, tol=1e-6):
        """Ground-state probability of the fitted batch."""
        self._check_fitted()
        return ground_state_prob(self.results_, gs_energy, tol)

    def energy_of(self, poly, bits):
        return evaluate(poly, bits)


class StructureRelaxer(TransformerMixin, BaseEstimator):
    """Maps a list of :class:`AtomList` to relaxed :class:`RelaxResult` objects."""

    def __init__(self, cell=None, model=None, tol_grad=1e-6, max_iter=500, rattle=0.0, seed=0):
        self.cell = cell
        self.model = model
        self.tol_grad = tol_grad
        self.max_iter = max_iter
        self.rattle = rattle
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.cell is None or self.model is None:
            raise ValueError("StructureRelaxer needs a cell and a potential model")
        return self

    def transform(self, X):
        self.fit()
        return [
            bfgs_relax(a, self.cell, self.model, self.tol_grad, self.max_iter, rattle=self.rattle, seed=[self.seed, i])
            for i, a in enumerate(X)
        ]
