"""Threshold reduction of strongly repulsive pairs (deduc-reduc)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .polynomial import HuboPolynomial


@dataclass(frozen=True)
class ReductionReport:
    """What a reduction did.

    Counts are stored nonzero terms per order, with variable tuples
    species-decorated (a site holding two species gives two variables).
    """

    threshold: float
    pairs_clamped: int
    removed: dict[int, int] = field(default_factory=dict)
    counts_before: dict[int, int] = field(default_factory=dict)
    counts_after: dict[int, int] = field(default_factory=dict)
    convention: str = "stored nonzero species-decorated terms"

    def reduction(self, order: int) -> float:
        """Fraction of ``order`` terms removed."""
        before = self.counts_before.get(order, 0)
        return 0.0 if before == 0 else 1.0 - self.counts_after.get(order, 0) / before


def deduc_reduc(poly: HuboPolynomial, threshold: float) -> tuple[HuboPolynomial, ReductionReport]:
    """Cap pair coefficients above ``threshold`` and drop higher terms holding such a pair.

    A pair with ``J > T`` already forbids its two variables from being set
    together in any low-energy string, so terms of order three and up that
    contain both are irrelevant and are removed; ``J`` becomes ``T``.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    before = poly.counts()
    out = poly.copy()
    n = poly.num_vars
    if 2 in poly.coeffs:
        strong = poly.coeffs[2] > threshold
        strong_keys = poly.indices[2][strong, 0] * n + poly.indices[2][strong, 1]
        out.coeffs[2] = np.minimum(poly.coeffs[2], threshold)
    else:
        strong_keys = np.zeros(0, dtype=np.int64)
    removed = {}
    for k in [k for k in poly.orders if k >= 3]:
        idx = poly.indices[k]
        hit = np.zeros(len(idx), dtype=bool)
        for a, b in itertools.combinations(range(k), 2):
            hit |= np.isin(idx[:, a] * n + idx[:, b], strong_keys)
        removed[k] = int(hit.sum())
        out.indices[k] = idx[~hit]
        out.coeffs[k] = poly.coeffs[k][~hit]
        if not len(out.coeffs[k]):
            del out.indices[k], out.coeffs[k]
    report = ReductionReport(
        threshold=float(threshold),
        pairs_clamped=int(len(strong_keys)),
        removed=removed,
        counts_before=before,
        counts_after=out.counts(),
    )
    return out, report
