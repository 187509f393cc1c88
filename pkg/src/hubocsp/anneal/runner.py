"""Single annealing runs, reproducible batches and their CSV records."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..hubo.polynomial import HuboPolynomial, evaluate
from .kernel import CompiledPolynomial, anneal_kernel, compile_polynomial
from .schedule import AnnealSchedule

RNG_ALGORITHM = "PCG64 (numpy.random.Generator), per-run SeedSequence spawn"
CSV_FIELDS = ("seed", "final_energy", "wall_time", "n_atoms_per_species", "bitstring_hex")


class Configuration:
    """Bit vector with per-species lists of set variables kept in sync."""

    def __init__(self, bits, var_species=None):
        self.bits = np.asarray(bits, dtype=np.int8).copy()
        if self.bits.ndim != 1 or not np.isin(self.bits, (0, 1)).all():
            raise ValueError("configuration must be a 1-d array of 0/1")
        n = len(self.bits)
        self.var_species = np.zeros(n, dtype=np.int64) if var_species is None else np.asarray(var_species)
        if len(self.var_species) != n:
            raise ValueError("var_species length differs from bit count")
        self.n_species = int(self.var_species.max()) + 1 if n else 0
        self._refresh()

    def _refresh(self):
        self.populations = [set(np.flatnonzero(self.bits & (self.var_species == s)).tolist()) for s in range(self.n_species)]

    def __len__(self):
        return len(self.bits)

    def flip(self, var: int) -> None:
        s = self.var_species[var]
        if self.bits[var]:
            self.bits[var] = 0
            self.populations[s].discard(var)
        else:
            self.bits[var] = 1
            self.populations[s].add(var)

    def counts(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.populations)

    def copy(self) -> "Configuration":
        return Configuration(self.bits, self.var_species)


@dataclass
class RunResult:
    bits: np.ndarray
    energy: float
    wall_time: float
    seed: int
    flip_attempts: int = 0
    exchange_attempts: int = 0
    max_drift: float = 0.0
    rng: str = RNG_ALGORITHM

    def counts(self, var_species, n_species: int) -> tuple[int, ...]:
        return tuple(np.bincount(np.asarray(var_species)[self.bits.astype(bool)], minlength=n_species).tolist())

    def bitstring_hex(self) -> str:
        return bits_to_hex(self.bits)


def bits_to_hex(bits) -> str:
    """Bit 0 is the most significant bit of the first hex digit."""
    b = np.asarray(bits, dtype=np.uint8)
    pad = (-len(b)) % 8
    packed = np.packbits(np.concatenate([b, np.zeros(pad, np.uint8)]))
    return packed.tobytes().hex()


def hex_to_bits(text: str, num_vars: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    return np.unpackbits(raw)[:num_vars].astype(np.int8)


def delta_flip(poly: HuboPolynomial, config, var: int) -> float:
    """Energy change from flipping ``var``: sum of terms containing it whose other bits are 1."""
    b = np.asarray(config.bits if isinstance(config, Configuration) else config).astype(bool)
    if not 0 <= var < poly.num_vars:
        raise IndexError(f"variable {var} out of range")
    sign = -1.0 if b[var] else 1.0
    total = 0.0
    for k in poly.orders:
        idx = poly.indices[k]
        has = np.any(idx == var, axis=1)
        others = b[idx[has]] | (idx[has] == var)
        total += float(np.sum(poly.coeffs[k][has][np.all(others, axis=1)]))
    return sign * total


def _compiled(poly) -> CompiledPolynomial:
    return poly if isinstance(poly, CompiledPolynomial) else compile_polynomial(poly)


def sweep(poly, config: Configuration, temp: float, rng: np.random.Generator, exchanges: bool = True) -> dict:
    """One Monte Carlo step per spin at temperature ``temp``, in place.

    Returns the attempted move counts.
    """
    cp = _compiled(poly)
    bits = config.bits
    _, flips, swaps, _ = anneal_kernel(
        bits, np.array([float(temp)]), rng, cp.h, cp.J, cp.pair_id, cp.cubic_ptr, cp.cubic_k, cp.cubic_c,
        cp.var_species, cp.n_species, cp.offset, exchanges, 0,
    )
    config._refresh()
    return {"flips": int(flips), "exchanges": int(swaps)}


_warm = False


def _warm_up() -> None:
    """Run the kernel once on a 1-variable problem so timings exclude JIT loading."""
    global _warm
    if _warm:
        return
    tiny = compile_polynomial(HuboPolynomial.from_terms(1, {(0,): -1.0}))
    rng = np.random.Generator(np.random.PCG64(0))
    anneal_kernel(
        np.zeros(1, np.int8), np.ones(1), rng, tiny.h, tiny.J, tiny.pair_id, tiny.cubic_ptr, tiny.cubic_k,
        tiny.cubic_c, tiny.var_species, tiny.n_species, tiny.offset, True, 1,
    )
    _warm = True


def run_sa(
    poly,
    schedule: AnnealSchedule,
    seed,
    initial=None,
    exchanges: bool = True,
    check_every: int = 0,
) -> RunResult:
    """Anneal from ``initial`` (or uniform random bits) through ``schedule.n_steps`` sweeps.

    ``seed`` is an int or a :class:`numpy.random.SeedSequence`.  With
    ``check_every > 0`` the running energy is recomputed from scratch at that
    interval and the largest drift is reported.
    """
    cp = _compiled(poly)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    rng = np.random.Generator(np.random.PCG64(ss))
    if initial is None:
        bits = rng.integers(0, 2, size=cp.num_vars).astype(np.int8)
    else:
        bits = np.array(initial.bits if isinstance(initial, Configuration) else initial, dtype=np.int8)
        if len(bits) != cp.num_vars:
            raise ValueError(f"initial state has {len(bits)} bits, polynomial {cp.num_vars}")
    temps = schedule.temperatures()
    _warm_up()
    t0 = time.perf_counter()
    e, flips, swaps, drift = anneal_kernel(
        bits, temps, rng, cp.h, cp.J, cp.pair_id, cp.cubic_ptr, cp.cubic_k, cp.cubic_c,
        cp.var_species, cp.n_species, cp.offset, exchanges, check_every,
    )
    wall = time.perf_counter() - t0
    return RunResult(bits, float(e), wall, _seed_int(ss), int(flips), int(swaps), float(drift))


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0])


def run_seeds(master_seed: int, n_runs: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(master_seed)).spawn(n_runs)


def _run_chunk(args):
    cp, schedule, seeds, exchanges = args
    return [run_sa(cp, schedule, s, exchanges=exchanges) for s in seeds]


def run_batch(
    poly,
    schedule: AnnealSchedule,
    n_runs: int,
    master_seed: int = 0,
    parallelism: int = 1,
    exchanges: bool = True,
) -> list[RunResult]:
    """``n_runs`` independent runs, seeded by spawning from ``master_seed``.

    Results are returned in seed order and do not depend on ``parallelism``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    cp = _compiled(poly)
    seeds = run_seeds(master_seed, n_runs)
    if parallelism <= 1:
        return [run_sa(cp, schedule, s, exchanges=exchanges) for s in seeds]
    chunks = [seeds[i::parallelism] for i in range(parallelism)]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        parts = list(pool.map(_run_chunk, [(cp, schedule, c, exchanges) for c in chunks]))
    out: list[RunResult] = [None] * n_runs  # type: ignore[list-item]
    for w, part in enumerate(parts):
        for r, res in enumerate(part):
            out[w + r * parallelism] = res
    return out


def write_batch_csv(path, results, var_species, n_species: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in results:
            counts = "/".join(map(str, r.counts(var_species, n_species)))
            w.writerow([r.seed, repr(r.energy), f"{r.wall_time:.6f}", counts, r.bitstring_hex()])


def read_batch_csv(path, num_vars: int) -> list[RunResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            missing = [k for k in CSV_FIELDS if k not in row]
            if missing:
                raise ValueError(f"{path}: missing columns {missing}")
            out.append(
                RunResult(
                    hex_to_bits(row["bitstring_hex"], num_vars),
                    float(row["final_energy"]),
                    float(row["wall_time"]),
                    int(row["seed"]),
                )
            )
    return out
