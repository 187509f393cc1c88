"""Compiled pair and triplet kernels shared by the potential models.

Parameter rows are flat float arrays so one kernel serves every species
combination:

* LJ pair row: ``epsilon, sigma, cutoff, shift_value, 0, cutoff``
* SW pair row: ``A, B, p, q, sigma, cutoff``
* SW triplet row (centre, leg, leg): ``lambda, gamma, cos_theta0, present``

The cutoff always sits in the last slot of a pair row.
"""

from __future__ import annotations

import numba as nb
import numpy as np

KIND_LJ = 0
KIND_SW = 1

# Distances below this are treated as coincident atoms.
ZERO_DISTANCE = 1e-10
# Finite stand-in for an infinite repulsion; keeps polynomial sums finite.
ZERO_DISTANCE_ENERGY = 1.0e4


@nb.njit(cache=True)
def pair_value(kind, row, r):
    if r < ZERO_DISTANCE:
        return ZERO_DISTANCE_ENERGY
    if kind == KIND_LJ:
        if r >= row[2]:
            return 0.0
        sr6 = (row[1] / r) ** 6
        return 4.0 * row[0] * (sr6 * sr6 - sr6) - row[3]
    if r >= row[5]:
        return 0.0
    s = row[4] / r
    return row[0] * (row[1] * s ** row[2] - s ** row[3]) * np.exp(row[4] / (r - row[5]))


@nb.njit(cache=True)
def angle_value(trow, prow_ij, prow_ik, dij, dik, rij, rik):
    """Three-body energy at the centre atom for legs ``dij`` and ``dik``."""
    if trow[3] == 0.0:
        return 0.0
    if rij < ZERO_DISTANCE or rik < ZERO_DISTANCE:
        return 0.0
    if rij >= prow_ij[5] or rik >= prow_ik[5]:
        return 0.0
    cos = (dij[0] * dik[0] + dij[1] * dik[1] + dij[2] * dik[2]) / (rij * rik)
    expo = trow[1] * prow_ij[4] / (rij - prow_ij[5]) + trow[1] * prow_ik[4] / (rik - prow_ik[5])
    d = cos - trow[2]
    return trow[0] * np.exp(expo) * d * d


@nb.njit(cache=True)
def local_pair_energies(kind, pair_rows, positions, species, n_orig):
    """Sum of pair terms touching each of the first ``n_orig`` atoms."""
    n = positions.shape[0]
    out = np.zeros(n_orig)
    for j in range(n_orig):
        sj = species[j]
        acc = 0.0
        for k in range(n):
            if k == j:
                continue
            dx = positions[k, 0] - positions[j, 0]
            dy = positions[k, 1] - positions[j, 1]
            dz = positions[k, 2] - positions[j, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            acc += pair_value(kind, pair_rows[sj, species[k]], r)
        out[j] = acc
    return out


@nb.njit(cache=True)
def _is_neighbour(positions, species, pair_rows, i, k):
    rc = pair_rows[species[i], species[k]][5]
    dx = positions[k, 0] - positions[i, 0]
    dy = positions[k, 1] - positions[i, 1]
    dz = positions[k, 2] - positions[i, 2]
    return dx * dx + dy * dy + dz * dz < rc * rc


@nb.njit(cache=True)
def neighbours(positions, species, pair_rows):
    """CSR list of atoms within the pair cutoff of each atom."""
    n = positions.shape[0]
    ptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        c = 0
        for k in range(n):
            if k != i and _is_neighbour(positions, species, pair_rows, i, k):
                c += 1
        ptr[i + 1] = ptr[i] + c
    nbr = np.empty(ptr[n], dtype=np.int64)
    for i in range(n):
        fill = ptr[i]
        for k in range(n):
            if k != i and _is_neighbour(positions, species, pair_rows, i, k):
                nbr[fill] = k
                fill += 1
    return ptr, nbr


@nb.njit(cache=True)
def local_triplet_energies(pair_rows, trip_rows, positions, species, n_orig):
    """Sum of three-body terms whose triple contains each original atom.

    A triple {j, k, l} carries ``h_j(k, l) + h_k(j, l) + h_l(j, k)``; for
    atom ``j`` that is every angle centred on ``j`` plus every angle centred
    on a neighbour of ``j`` that uses ``j`` as a leg.
    """
    out = np.zeros(n_orig)
    ptr, nbr = neighbours(positions, species, pair_rows)
    dij = np.empty(3)
    dik = np.empty(3)
    for j in range(n_orig):
        acc = 0.0
        sj = species[j]
        for a in range(ptr[j], ptr[j + 1]):
            k = nbr[a]
            for b in range(a + 1, ptr[j + 1]):
                l = nbr[b]
                for c in range(3):
                    dij[c] = positions[k, c] - positions[j, c]
                    dik[c] = positions[l, c] - positions[j, c]
                rij = np.sqrt(dij[0] ** 2 + dij[1] ** 2 + dij[2] ** 2)
                rik = np.sqrt(dik[0] ** 2 + dik[1] ** 2 + dik[2] ** 2)
                sk = species[k]
                sl = species[l]
                acc += angle_value(
                    trip_rows[sj, sk, sl], pair_rows[sj, sk], pair_rows[sj, sl], dij, dik, rij, rik
                )
        for a in range(ptr[j], ptr[j + 1]):
            k = nbr[a]
            sk = species[k]
            for b in range(ptr[k], ptr[k + 1]):
                l = nbr[b]
                if l == j:
                    continue
                for c in range(3):
                    dij[c] = positions[j, c] - positions[k, c]
                    dik[c] = positions[l, c] - positions[k, c]
                rij = np.sqrt(dij[0] ** 2 + dij[1] ** 2 + dij[2] ** 2)
                rik = np.sqrt(dik[0] ** 2 + dik[1] ** 2 + dik[2] ** 2)
                sl = species[l]
                acc += angle_value(
                    trip_rows[sk, sj, sl], pair_rows[sk, sj], pair_rows[sk, sl], dij, dik, rij, rik
                )
        out[j] = acc
    return out
