"""Shifted 12-6 Lennard-Jones pair potential."""

from __future__ import annotations

from .base import PotentialModel, load_model


def lj_pair(r: float, pair=("Kr", "Kr"), model: PotentialModel | None = None) -> float:
    """Pair energy in eV, shifted so the value at the cutoff is zero.

    Zero for ``r >= cutoff``; coincident atoms (``r == 0``) get a large
    positive sentinel instead of NaN.
    """
    model = model if model is not None else load_model("kr_lj")
    if model.kind != "LJ":
        raise ValueError(f"expected an LJ model, got {model.kind}")
    return model.pair_energy(pair[0], pair[1], float(r))
