"""Sparse higher-order binary polynomial with per-order index arrays."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Coefficients smaller than this are dropped on insert.
ZERO_TOL = 1e-12


class PolynomialFormatError(ValueError):
    pass


def _merge(idx: np.ndarray, coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort rows lexicographically, sum duplicates, drop near-zero coefficients."""
    if len(idx) == 0:
        return idx.reshape(0, idx.shape[1]).astype(np.int64), coef.astype(float)
    order = np.lexsort(idx.T[::-1])
    idx, coef = idx[order], coef[order]
    new = np.ones(len(idx), dtype=bool)
    new[1:] = np.any(idx[1:] != idx[:-1], axis=1)
    starts = np.flatnonzero(new)
    summed = np.add.reduceat(coef, starts)
    idx = idx[starts]
    keep = np.abs(summed) >= ZERO_TOL
    return np.ascontiguousarray(idx[keep], dtype=np.int64), summed[keep]


@dataclass
class HuboPolynomial:
    """``offset + sum_t coeff_t * prod_{i in t} b_i`` over binary ``b``.

    ``indices[k]`` is an ``(n_k, k)`` array of strictly increasing variable
    tuples sorted lexicographically, ``coeffs[k]`` the matching coefficients.
    ``var_species`` optionally tags each variable with its species id.
    """

    num_vars: int
    indices: dict[int, np.ndarray] = field(default_factory=dict)
    coeffs: dict[int, np.ndarray] = field(default_factory=dict)
    offset: float = 0.0
    var_species: np.ndarray | None = None
    species_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        for k in list(self.indices):
            idx = np.asarray(self.indices[k], dtype=np.int64).reshape(-1, k)
            coef = np.asarray(self.coeffs[k], dtype=float).reshape(-1)
            self._check(idx, coef, k)
            self.indices[k], self.coeffs[k] = _merge(idx, coef)
            if not len(self.coeffs[k]):
                del self.indices[k], self.coeffs[k]
        if self.var_species is not None:
            self.var_species = np.asarray(self.var_species, dtype=np.int64)
            if len(self.var_species) != self.num_vars:
                raise ValueError("var_species length differs from num_vars")

    def _check(self, idx, coef, k):
        if len(idx) != len(coef):
            raise ValueError(f"order {k}: {len(idx)} tuples but {len(coef)} coefficients")
        if len(idx) == 0:
            return
        if idx.min() < 0 or idx.max() >= self.num_vars:
            raise ValueError(f"order {k}: variable index outside [0, {self.num_vars})")
        if k > 1 and np.any(idx[:, 1:] <= idx[:, :-1]):
            raise ValueError(f"order {k}: tuples must be strictly increasing")
        if not np.all(np.isfinite(coef)):
            raise ValueError(f"order {k}: non-finite coefficient")

    @classmethod
    def from_terms(cls, num_vars: int, terms: dict, offset: float = 0.0, **kw) -> "HuboPolynomial":
        """Build from ``{tuple: coeff}``; unsorted tuples are sorted, repeats collapsed."""
        by_order: dict[int, list] = {}
        for key, c in terms.items():
            t = tuple(sorted(set(int(v) for v in key)))
            if not t:
                offset += c
                continue
            by_order.setdefault(len(t), []).append((t, c))
        idx = {k: np.array([t for t, _ in v], dtype=np.int64) for k, v in by_order.items()}
        coef = {k: np.array([c for _, c in v], dtype=float) for k, v in by_order.items()}
        return cls(num_vars, idx, coef, float(offset), **kw)

    # -- views -----------------------------------------------------------
    @property
    def max_order(self) -> int:
        return max(self.indices, default=0)

    @property
    def orders(self) -> list[int]:
        return sorted(self.indices)

    def count(self, order: int) -> int:
        return len(self.coeffs.get(order, ()))

    def counts(self) -> dict[int, int]:
        return {k: self.count(k) for k in self.orders}

    def __len__(self) -> int:
        return sum(self.counts().values())

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        out = {}
        for k in self.orders:
            for t, c in zip(self.indices[k].tolist(), self.coeffs[k].tolist()):
                out[tuple(t)] = c
        return out

    def coefficient(self, key) -> float:
        t = np.array(sorted(key), dtype=np.int64)
        k = len(t)
        if k not in self.indices:
            return 0.0
        hit = np.flatnonzero(np.all(self.indices[k] == t, axis=1))
        return float(self.coeffs[k][hit[0]]) if len(hit) else 0.0

    def linear(self) -> np.ndarray:
        h = np.zeros(self.num_vars)
        if 1 in self.indices:
            h[self.indices[1][:, 0]] = self.coeffs[1]
        return h

    def pair_matrix(self) -> np.ndarray:
        """Dense symmetric matrix of quadratic coefficients."""
        J = np.zeros((self.num_vars, self.num_vars))
        if 2 in self.indices:
            i, j = self.indices[2].T
            J[i, j] = self.coeffs[2]
            J[j, i] = self.coeffs[2]
        return J

    def copy(self) -> "HuboPolynomial":
        return HuboPolynomial(
            self.num_vars,
            {k: v.copy() for k, v in self.indices.items()},
            {k: v.copy() for k, v in self.coeffs.items()},
            self.offset,
            None if self.var_species is None else self.var_species.copy(),
            self.species_names,
        )

    def with_terms(self, order: int, idx, coef, offset: float = 0.0) -> "HuboPolynomial":
        """New polynomial with extra terms of one order merged in."""
        out = self.copy()
        idx = np.asarray(idx, dtype=np.int64).reshape(-1, order)
        coef = np.asarray(coef, dtype=float).reshape(-1)
        out._check(idx, coef, order)
        if order in out.indices:
            idx = np.concatenate([out.indices[order], idx])
            coef = np.concatenate([out.coeffs[order], coef])
        out.indices[order], out.coeffs[order] = _merge(idx, coef)
        if not len(out.coeffs[order]):
            del out.indices[order], out.coeffs[order]
        out.offset += offset
        return out

    # -- evaluation -------------------------------------------------------
    def evaluate(self, config) -> float:
        return evaluate(self, config)


def evaluate(poly: HuboPolynomial, config) -> float:
    """Polynomial value at a binary string, summed order by order in sorted term order."""
    b = np.asarray(config)
    if b.ndim != 1 or len(b) != poly.num_vars:
        raise ValueError(f"configuration length {b.size} != num_vars {poly.num_vars}")
    b = b.astype(bool)
    total = poly.offset
    for k in poly.orders:
        active = np.all(b[poly.indices[k]], axis=1)
        total += float(np.sum(poly.coeffs[k][active]))
    return total


def evaluate_many(poly: HuboPolynomial, configs) -> np.ndarray:
    B = np.asarray(configs, dtype=bool)
    return np.array([evaluate(poly, b) for b in B])


# -- text format ----------------------------------------------------------------


def export_poly(poly: HuboPolynomial, path) -> None:
    """Write ``#vars``/``#offset`` headers then one ``i1 .. ik coeff`` line per term."""
    lines = [f"#vars {poly.num_vars}", f"#offset {poly.offset!r}"]
    for k in poly.orders:
        for t, c in zip(poly.indices[k].tolist(), poly.coeffs[k].tolist()):
            lines.append(" ".join(map(str, t)) + f" {c!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def import_poly(path) -> HuboPolynomial:
    """Read a polynomial file; duplicate tuples are summed with a warning."""
    num_vars = None
    offset = 0.0
    rows: dict[int, list] = {}
    seen: set[tuple[int, ...]] = set()
    dupes = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                head = line[1:].split()
                if head and head[0] == "vars":
                    num_vars = _field(head, int, path, lineno)
                elif head and head[0] == "offset":
                    offset = _field(head, float, path, lineno)
                continue
            parts = line.split()
            if len(parts) < 2:
                raise PolynomialFormatError(f"{path}:{lineno}: expected indices and a coefficient")
            try:
                t = tuple(int(v) for v in parts[:-1])
                c = float(parts[-1])
            except ValueError:
                raise PolynomialFormatError(f"{path}:{lineno}: malformed term {line!r}") from None
            if any(b <= a for a, b in zip(t, t[1:])):
                raise PolynomialFormatError(f"{path}:{lineno}: indices must be strictly increasing")
            if num_vars is None:
                raise PolynomialFormatError(f"{path}:{lineno}: term before #vars header")
            if t[0] < 0 or t[-1] >= num_vars:
                raise PolynomialFormatError(f"{path}:{lineno}: index outside [0, {num_vars})")
            if t in seen:
                dupes += 1
            seen.add(t)
            rows.setdefault(len(t), []).append((t, c))
    if num_vars is None:
        raise PolynomialFormatError(f"{path}: missing #vars header")
    if dupes:
        warnings.warn(f"{path}: {dupes} duplicate term(s) summed", stacklevel=2)
    idx = {k: np.array([t for t, _ in v], dtype=np.int64) for k, v in rows.items()}
    coef = {k: np.array([c for _, c in v]) for k, v in rows.items()}
    return HuboPolynomial(num_vars, idx, coef, offset)


def _field(head, cast, path, lineno):
    try:
        return cast(head[1])
    except (IndexError, ValueError):
        raise PolynomialFormatError(f"{path}:{lineno}: bad #{head[0]} header") from None
