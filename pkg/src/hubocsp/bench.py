"""Success statistics, time-to-solution and residual histograms of annealing batches."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .anneal import AnnealSchedule, run_batch

GS_TOL = 1e-6
TARGET_CONFIDENCE = 0.99


@dataclass
class RunStats:
    n_runs: int
    gs_count: int
    p_gs: float
    mean_residual: float
    tau: float
    tts: float
    density_counts: dict[str, int] = field(default_factory=dict)
    n_steps: int | None = None
    best: bool = False

    def as_row(self) -> dict:
        row = asdict(self)
        row["density_counts"] = json.dumps(self.density_counts, sort_keys=True)
        return row


def _energies(results) -> np.ndarray:
    return np.array([r.energy if hasattr(r, "energy") else float(r) for r in results], dtype=float)


def ground_state_prob(results, gs_energy: float, tol: float = GS_TOL) -> float:
    """Fraction of runs whose energy is within ``tol`` of ``gs_energy``."""
    e = _energies(results)
    if len(e) == 0:
        raise ValueError("no runs")
    return float(np.mean(np.abs(e - gs_energy) <= tol))


def tts(tau: float, p_gs: float, p_r: float = TARGET_CONFIDENCE, n_runs: int | None = None) -> float:
    """Time to reach the ground state with confidence ``p_r``: ``tau ln(1-p_r) / ln(1-p_gs)``.

    ``p_gs = 0`` gives ``inf``.  ``p_gs = 1`` would give 0; it is replaced
    by ``1 - eps`` with ``eps = 1/(n_runs + 1)`` (``n_runs`` defaults to 1000).
    """
    if not 0.0 <= p_gs <= 1.0:
        raise ValueError(f"p_gs must lie in [0, 1], got {p_gs}")
    if not 0.0 < p_r < 1.0:
        raise ValueError(f"p_r must lie in (0, 1), got {p_r}")
    if p_gs == 0.0:
        return math.inf
    if p_gs == 1.0:
        eps = 1.0 / ((n_runs if n_runs is not None else 1000) + 1)
        return tau * math.log(1 - p_r) / math.log(eps)
    return tau * math.log(1 - p_r) / math.log(1 - p_gs)


def density_label(counts: Sequence[int], names: Sequence[str] = ()) -> str:
    if names:
        return "".join(f"{n}{c}" for n, c in zip(names, counts))
    return "/".join(map(str, counts))


def run_stats(results, gs_energy: float, var_species=None, species_names=(), tol: float = GS_TOL, n_steps=None) -> RunStats:
    e = _energies(results)
    p = ground_state_prob(results, gs_energy, tol)
    tau = float(np.mean([r.wall_time for r in results]))
    dens: dict[str, int] = {}
    if var_species is not None:
        n_sp = int(np.max(var_species)) + 1
        for r in results:
            lab = density_label(r.counts(var_species, n_sp), species_names)
            dens[lab] = dens.get(lab, 0) + 1
    return RunStats(
        n_runs=len(e),
        gs_count=int(np.sum(np.abs(e - gs_energy) <= tol)),
        p_gs=p,
        mean_residual=float(np.mean(e - gs_energy)),
        tau=tau,
        tts=tts(tau, p, n_runs=len(e)),
        density_counts=dens,
        n_steps=n_steps,
    )


def histogram(results, gs_energy: float, bin_width: float, var_species=None, species_names=(), target=None, path=None):
    """Residual-energy histogram, split into correct and other densities.

    Bin ``k`` covers ``[k w, (k + 1) w)`` of residual.  ``target`` is the
    per-species count regarded as correct; without it every run counts as
    correct.  Returns a list of row dicts and writes CSV if ``path`` is given.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    e = _energies(results)
    resid = e - gs_energy
    bins = np.floor(resid / bin_width + 1e-9).astype(np.int64)
    correct = np.ones(len(e), dtype=bool)
    if target is not None and var_species is not None:
        n_sp = int(np.max(var_species)) + 1
        correct = np.array([tuple(r.counts(var_species, n_sp)) == tuple(target) for r in results])
    rows = []
    for b in np.unique(bins):
        sel = bins == b
        rows.append(
            {
                "bin_lo": float(b * bin_width),
                "bin_hi": float((b + 1) * bin_width),
                "count": int(sel.sum()),
                "correct_density": int((sel & correct).sum()),
                "other_density": int((sel & ~correct).sum()),
            }
        )
    if path is not None:
        _write_rows(path, rows)
    return rows


def correct_density_fraction(results, var_species, target) -> float:
    n_sp = int(np.max(var_species)) + 1
    return float(np.mean([tuple(r.counts(var_species, n_sp)) == tuple(target) for r in results]))


def schedule_sweep(
    poly,
    schedules: Sequence[AnnealSchedule],
    n_runs: int,
    gs_energy: float,
    master_seed: int = 0,
    tol: float = GS_TOL,
    parallelism: int = 1,
    path=None,
) -> list[RunStats]:
    """One :class:`RunStats` row per schedule; the minimum-TTS row has ``best=True``."""
    if not schedules:
        raise ValueError("no schedules given")
    rows = []
    for sch in schedules:
        res = run_batch(poly, sch, n_runs, master_seed, parallelism)
        rows.append(run_stats(res, gs_energy, tol=tol, n_steps=sch.n_steps))
    best = min(range(len(rows)), key=lambda i: rows[i].tts)
    rows[best].best = True
    if path is not None:
        _write_rows(path, [r.as_row() for r in rows])
    return rows


def fit_tts_scale(num_vars, tts_values) -> float:
    """Least-squares ``a`` in ``tts = a (N + N(N-1)/2)``."""
    n = np.asarray(num_vars, dtype=float)
    y = np.asarray(tts_values, dtype=float)
    x = n + n * (n - 1) / 2
    ok = np.isfinite(y)
    return float(np.dot(x[ok], y[ok]) / np.dot(x[ok], x[ok]))


def summary_record(stats: RunStats) -> str:
    return json.dumps(stats.as_row(), sort_keys=True)


def _write_rows(path, rows):
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
