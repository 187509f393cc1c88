"""Compiled Metropolis sweeps over a polynomial of order at most three.

State is the bit vector plus a local field ``f_i = dE/db_i`` (the energy
added by setting ``b_i = 1`` with all other bits fixed), so a flip costs
``(1 - 2 b_i) f_i``.  Cubic terms are stored per variable pair: for each pair
``(i, j)`` the list of ``(k, c)`` with ``c b_i b_j b_k`` in the polynomial.
A flip of ``i`` then updates fields through the pairs ``(i, k)`` with ``k``
set, which keeps the cost proportional to the number of set bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..hubo.polynomial import HuboPolynomial


@dataclass(frozen=True)
class CompiledPolynomial:
    num_vars: int
    offset: float
    h: np.ndarray
    J: np.ndarray
    pair_id: np.ndarray
    cubic_ptr: np.ndarray
    cubic_k: np.ndarray
    cubic_c: np.ndarray
    var_species: np.ndarray
    n_species: int


def compile_polynomial(poly: HuboPolynomial) -> CompiledPolynomial:
    if poly.max_order > 3:
        raise NotImplementedError(f"annealing supports order <= 3, polynomial has order {poly.max_order}")
    n = poly.num_vars
    h = poly.linear()
    J = poly.pair_matrix()
    pair_id = np.full((n, n), -1, dtype=np.int32)
    if 3 in poly.indices:
        t = poly.indices[3]
        c = poly.coeffs[3]
        # each triple is listed under its three pairs
        a = np.concatenate([t[:, 0], t[:, 0], t[:, 1]])
        b = np.concatenate([t[:, 1], t[:, 2], t[:, 2]])
        k = np.concatenate([t[:, 2], t[:, 1], t[:, 0]])
        cc = np.concatenate([c, c, c])
        key = a * n + b
        order = np.argsort(key, kind="stable")
        key, k, cc = key[order], k[order], cc[order]
        uniq, start = np.unique(key, return_index=True)
        ptr = np.append(start, len(key)).astype(np.int64)
        ids = np.arange(len(uniq), dtype=np.int32)
        pair_id[uniq // n, uniq % n] = ids
        pair_id[uniq % n, uniq // n] = ids
        cubic_k, cubic_c = k.astype(np.int32), cc.astype(float)
    else:
        ptr = np.zeros(1, dtype=np.int64)
        cubic_k, cubic_c = np.zeros(0, dtype=np.int32), np.zeros(0)
    if poly.var_species is None:
        var_species = np.zeros(n, dtype=np.int64)
    else:
        var_species = poly.var_species.astype(np.int64)
    n_species = int(var_species.max()) + 1 if n else 1
    return CompiledPolynomial(n, float(poly.offset), h, J, pair_id, ptr, cubic_k, cubic_c, var_species, n_species)


@nb.njit(cache=True)
def local_fields(h, J, pair_id, cptr, ck, cc, b):
    n = b.shape[0]
    f = h.copy()
    for i in range(n):
        if b[i]:
            for j in range(n):
                f[j] += J[i, j]
    for i in range(n):
        if not b[i]:
            continue
        for j in range(i + 1, n):
            if not b[j]:
                continue
            p = pair_id[i, j]
            if p < 0:
                continue
            for t in range(cptr[p], cptr[p + 1]):
                f[ck[t]] += cc[t]
    return f


@nb.njit(cache=True)
def energy_of(offset, h, J, pair_id, cptr, ck, cc, b):
    n = b.shape[0]
    e = offset
    for i in range(n):
        if not b[i]:
            continue
        e += h[i]
        for j in range(i + 1, n):
            if not b[j]:
                continue
            e += J[i, j]
            p = pair_id[i, j]
            if p < 0:
                continue
            for t in range(cptr[p], cptr[p + 1]):
                k = ck[t]
                if k > j and b[k]:
                    e += cc[t]
    return e


@nb.njit(cache=True)
def _apply_flip(i, b, f, occ, where, n_occ, J, pair_id, cptr, ck, cc):
    """Flip bit ``i`` and update the fields; returns the new set-bit count."""
    n = b.shape[0]
    delta = 1.0 if b[i] == 0 else -1.0
    for j in range(n):
        f[j] += delta * J[i, j]
    for a in range(n_occ):
        k = occ[a]
        if k == i:
            continue
        p = pair_id[i, k]
        if p < 0:
            continue
        for t in range(cptr[p], cptr[p + 1]):
            f[ck[t]] += delta * cc[t]
    if b[i] == 0:
        b[i] = 1
        occ[n_occ] = i
        where[i] = n_occ
        return n_occ + 1
    b[i] = 0
    last = occ[n_occ - 1]
    occ[where[i]] = last
    where[last] = where[i]
    where[i] = -1
    return n_occ - 1


@nb.njit(cache=True)
def _accept(de, temp, rng):
    if de <= 0.0:
        return True
    return rng.random() < np.exp(-de / temp)


@nb.njit(cache=True)
def exchange_delta(on, off, f, b, J, pair_id, cptr, ck, cc):
    """Energy change of clearing ``on`` and setting ``off`` together."""
    de = -f[on] + f[off] - J[on, off]
    p = pair_id[on, off]
    if p >= 0:
        for t in range(cptr[p], cptr[p + 1]):
            if b[ck[t]]:
                de -= cc[t]
    return de


@nb.njit(cache=True)
def anneal_kernel(b, temps, rng, h, J, pair_id, cptr, ck, cc, var_species, n_species, offset, exchanges, check_every):
    """Run one chain in place; returns (energy, flip attempts, exchange attempts, max resync error)."""
    n = b.shape[0]
    f = local_fields(h, J, pair_id, cptr, ck, cc, b)
    e = energy_of(offset, h, J, pair_id, cptr, ck, cc, b)
    occ = np.empty(n, dtype=np.int64)
    where = np.full(n, -1, dtype=np.int64)
    n_occ = 0
    for i in range(n):
        if b[i]:
            occ[n_occ] = i
            where[i] = n_occ
            n_occ += 1
    flips = 0
    swaps = 0
    drift = 0.0
    by_species = np.empty(n, dtype=np.int64)
    pair_a = np.empty(0, dtype=np.int64)
    pair_b = np.empty(0, dtype=np.int64)
    for step in range(temps.shape[0]):
        temp = temps[step]
        order = rng.permutation(n)
        for q in range(n):
            i = order[q]
            de = f[i] if b[i] == 0 else -f[i]
            flips += 1
            if _accept(de, temp, rng):
                n_occ = _apply_flip(i, b, f, occ, where, n_occ, J, pair_id, cptr, ck, cc)
                e += de
        if exchanges:
            # opposite-valued same-species pairs, frozen at the start of the phase
            total = 0
            for s in range(n_species):
                n_on = 0
                n_off = 0
                for i in range(n):
                    if var_species[i] == s:
                        if b[i]:
                            n_on += 1
                        else:
                            n_off += 1
                total += n_on * n_off
            if pair_a.shape[0] < total:
                pair_a = np.empty(total, dtype=np.int64)
                pair_b = np.empty(total, dtype=np.int64)
            m = 0
            for s in range(n_species):
                n_s = 0
                for i in range(n):
                    if var_species[i] == s:
                        by_species[n_s] = i
                        n_s += 1
                for x in range(n_s):
                    i = by_species[x]
                    if not b[i]:
                        continue
                    for y in range(n_s):
                        j = by_species[y]
                        if b[j]:
                            continue
                        pair_a[m] = i
                        pair_b[m] = j
                        m += 1
            perm = rng.permutation(m)
            for q in range(m):
                i = pair_a[perm[q]]
                j = pair_b[perm[q]]
                if b[i] == b[j]:
                    continue
                on, off = (i, j) if b[i] else (j, i)
                de = exchange_delta(on, off, f, b, J, pair_id, cptr, ck, cc)
                swaps += 1
                if _accept(de, temp, rng):
                    n_occ = _apply_flip(on, b, f, occ, where, n_occ, J, pair_id, cptr, ck, cc)
                    n_occ = _apply_flip(off, b, f, occ, where, n_occ, J, pair_id, cptr, ck, cc)
                    e += de
        if check_every > 0 and (step + 1) % check_every == 0:
            exact = energy_of(offset, h, J, pair_id, cptr, ck, cc, b)
            drift = max(drift, abs(exact - e))
            e = exact
    e = energy_of(offset, h, J, pair_id, cptr, ck, cc, b)
    return e, flips, swaps, drift
