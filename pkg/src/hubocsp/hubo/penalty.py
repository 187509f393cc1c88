"""Quadratic composition penalties expanded over binary variables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polynomial import HuboPolynomial


@dataclass(frozen=True)
class PenaltySpec:
    """Composition constraint with strength ``strength`` (eV).

    ``absolute``: ``targets`` maps species name or id to a required count.
    ``relative``: ``pair`` = (s1, s2) with ``ratio`` c, penalising
    ``(n_s1 - c * n_s2)^2``.
    """

    kind: str
    strength: float
    targets: dict = field(default_factory=dict)
    pair: tuple = ()
    ratio: float = 1.0

    def __post_init__(self):
        if self.kind not in ("absolute", "relative"):
            raise ValueError(f"penalty kind must be 'absolute' or 'relative', got {self.kind!r}")
        if not self.strength > 0:
            raise ValueError(f"penalty strength must be positive, got {self.strength}")
        if self.kind == "absolute":
            if not self.targets:
                raise ValueError("absolute penalty needs at least one species target")
            for s, c in self.targets.items():
                if c < 0:
                    raise ValueError(f"negative target count for {s!r}")
        else:
            if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
                raise ValueError("relative penalty needs two distinct species")
            if not self.ratio > 0:
                raise ValueError(f"ratio must be positive, got {self.ratio}")

    def value(self, counts: dict) -> float:
        """Penalty for given per-species counts (keys as in the spec)."""
        P = self.strength
        if self.kind == "absolute":
            return P * sum((counts.get(s, 0) - c) ** 2 for s, c in self.targets.items())
        s1, s2 = self.pair
        return P * (counts.get(s1, 0) - self.ratio * counts.get(s2, 0)) ** 2


def _species_vars(poly: HuboPolynomial, species) -> np.ndarray:
    if poly.var_species is None:
        raise ValueError("polynomial has no variable species tags")
    if isinstance(species, str):
        if species not in poly.species_names:
            raise ValueError(f"species {species!r} absent from the grid {poly.species_names}")
        species = poly.species_names.index(species)
    if species not in set(poly.var_species.tolist()):
        raise ValueError(f"species {species!r} absent from the grid")
    return np.flatnonzero(poly.var_species == species)


def _pairs_within(v: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(len(v), k=1)
    return np.stack([v[i], v[j]], axis=1)


def _pairs_across(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    a, b = np.meshgrid(u, v, indexing="ij")
    p = np.stack([a.ravel(), b.ravel()], axis=1)
    return np.sort(p, axis=1)


def add_absolute_penalty(poly: HuboPolynomial, spec: PenaltySpec) -> HuboPolynomial:
    """Add ``P (sum_x b_x^s - C_s)^2`` for every targeted species ``s``."""
    if spec.kind != "absolute":
        raise ValueError("expected an absolute penalty")
    P = spec.strength
    out = poly
    for s, C in spec.targets.items():
        v = _species_vars(poly, s)
        out = out.with_terms(1, v[:, None], np.full(len(v), P * (1 - 2 * C)), offset=P * C * C)
        pairs = _pairs_within(v)
        out = out.with_terms(2, pairs, np.full(len(pairs), 2 * P))
    return out


def add_relative_penalty(poly: HuboPolynomial, spec: PenaltySpec) -> HuboPolynomial:
    """Add ``P (sum b^{s1} - c sum b^{s2})^2``."""
    if spec.kind != "relative":
        raise ValueError("expected a relative penalty")
    P, c = spec.strength, spec.ratio
    u = _species_vars(poly, spec.pair[0])
    v = _species_vars(poly, spec.pair[1])
    out = poly.with_terms(1, u[:, None], np.full(len(u), P))
    out = out.with_terms(1, v[:, None], np.full(len(v), P * c * c))
    pu, pv, cross = _pairs_within(u), _pairs_within(v), _pairs_across(u, v)
    out = out.with_terms(2, pu, np.full(len(pu), 2 * P))
    out = out.with_terms(2, pv, np.full(len(pv), 2 * P * c * c))
    out = out.with_terms(2, cross, np.full(len(cross), -2 * P * c))
    return out


def add_penalty(poly: HuboPolynomial, spec: PenaltySpec) -> HuboPolynomial:
    if spec.kind == "absolute":
        return add_absolute_penalty(poly, spec)
    return add_relative_penalty(poly, spec)
