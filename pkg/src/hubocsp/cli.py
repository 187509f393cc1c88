"""Command-line front end: ``hubocsp {build,anneal,refine,bench,export} CONFIG``.

Exit codes: 0 success, 1 invalid configuration or usage, 2 runtime failure.
Failures print one JSON record to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bench
from .anneal import AnnealSchedule, read_batch_csv, run_batch, write_batch_csv
from .cell import decode, write_extxyz
from .config import ConfigError, RunConfig, read_config
from .hubo import add_penalty, build_hubo, deduc_reduc, export_poly, import_poly
from .hubo.polynomial import PolynomialFormatError
from .refine import bfgs_relax, classify

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _notice(message: str) -> None:
    _emit({"level": "notice", "message": message})


# -- stages ---------------------------------------------------------------------


def build_polynomial(cfg: RunConfig):
    """Polynomial of the configured system plus a report of term counts at each stage."""
    grid, cell = cfg.system()
    poly = build_hubo(grid, cell, cfg.model, clamp=cfg.clamp, method=cfg.method)
    report = {"num_vars": poly.num_vars, "counts_built": _counts(poly)}
    if cfg.penalty is not None:
        poly = add_penalty(poly, cfg.penalty)
        report["penalty"] = cfg.penalty.kind
    report["counts_before_reduction"] = _counts(poly)
    if cfg.reduction_threshold is not None:
        poly, red = deduc_reduc(poly, cfg.reduction_threshold)
        report["reduction"] = {
            "threshold": red.threshold,
            "pairs_clamped": red.pairs_clamped,
            "removed": {str(k): v for k, v in red.removed.items()},
            "cubic_reduction": red.reduction(3) if 3 in red.counts_before else 0.0,
            "convention": red.convention,
        }
    report["counts_after_reduction"] = _counts(poly)
    return poly, report


def _counts(poly) -> dict[str, int]:
    return {str(k): v for k, v in sorted(poly.counts().items())}


def _relax_row(args):
    bits, grid, cell, cfg_values, idx = args
    model, tol_grad, max_iter, rattle, seed = cfg_values
    atoms = decode(bits, grid, cell)
    try:
        res = bfgs_relax(atoms, cell, model, tol_grad=tol_grad, max_iter=max_iter, rattle=rattle, seed=[seed, idx])
    except Exception as exc:  # recorded per row, never fatal to the batch
        return None, f"{type(exc).__name__}: {exc}"
    return res, res.message


def relax_batch(cfg: RunConfig, results):
    grid, cell = cfg.system()
    values = (cfg.model, cfg.tol_grad, cfg.max_iter, cfg.rattle, cfg.refine_seed)
    jobs = [(r.bits, grid, cell, values, i) for i, r in enumerate(results)]
    if cfg.parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            return list(pool.map(_relax_row, jobs, chunksize=max(1, len(jobs) // (4 * cfg.parallelism))))
    return [_relax_row(j) for j in jobs]


# -- commands -------------------------------------------------------------------


def cmd_build(cfg: RunConfig, args) -> int:
    poly, report = build_polynomial(cfg)
    out = Path(args.poly) if args.poly else cfg.path("poly")
    export_poly(poly, out)
    report["polynomial"] = str(out)
    cfg.path("build.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _load_poly(cfg: RunConfig, path):
    grid, _ = cfg.system()
    p = Path(path) if path else cfg.path("poly")
    if not p.is_file():
        raise FileNotFoundError(f"polynomial file {str(p)!r} not found (run 'build' first)")
    poly = import_poly(p)
    if poly.num_vars != grid.num_vars:
        raise ValueError(f"polynomial has {poly.num_vars} variables, configured grid has {grid.num_vars}")
    poly.var_species = grid.var_species
    poly.species_names = tuple(grid.species_names)
    return poly


def cmd_anneal(cfg: RunConfig, args) -> int:
    poly = _load_poly(cfg, args.poly)
    grid, _ = cfg.system()
    results = run_batch(poly, cfg.schedule, cfg.n_runs, cfg.master_seed, cfg.parallelism) if cfg.n_runs else []
    if not cfg.record_timing:
        for r in results:
            r.wall_time = 0.0
    out = Path(args.results) if args.results else cfg.path("runs.csv")
    write_batch_csv(out, results, grid.var_species, grid.n_species)
    summary = {"results": str(out), "n_runs": len(results)}
    if results:
        e = np.array([r.energy for r in results])
        summary.update(min_energy=float(e.min()), mean_energy=float(e.mean()))
        gs = cfg.resolved_gs_energy()
        if gs is not None:
            summary.update(gs_energy=gs, p_gs=bench.ground_state_prob(results, gs, cfg.gs_tol))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _load_results(cfg: RunConfig, path):
    grid, _ = cfg.system()
    p = Path(path) if path else cfg.path("runs.csv")
    if not p.is_file():
        raise FileNotFoundError(f"results file {str(p)!r} not found (run 'anneal' first)")
    return p, read_batch_csv(p, grid.num_vars)


def cmd_refine(cfg: RunConfig, args) -> int:
    src, results = _load_results(cfg, args.results)
    grid, cell = cfg.system()
    catalog = cfg.catalog()
    relaxed = relax_batch(cfg, results)
    with open(src, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = Path(args.output) if args.output else cfg.path("refined.csv")
    fields = list(rows[0]) if rows else []
    fields += ["relaxed_energy", "converged", "label", "status"]
    minima: dict[tuple, object] = {}
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields or ["seed", "relaxed_energy", "converged", "label", "status"])
        w.writeheader()
        for row, (res, msg) in zip(rows, relaxed):
            if res is None:
                row.update(relaxed_energy="nan", converged="False", label="failed", status=msg)
            else:
                label = classify(res, catalog, cfg.energy_tol, grid.n_species)
                row.update(relaxed_energy=repr(res.final_energy), converged=str(res.converged), label=label, status=msg or "ok")
                key = (label, res.atoms.composition(grid.n_species), round(res.final_energy / cfg.energy_tol))
                minima.setdefault(key, res)
            w.writerow(row)
    for k, ((label, comp, _), res) in enumerate(sorted(minima.items(), key=lambda kv: kv[1].final_energy)):
        write_extxyz(cfg.path(f"min{k:03d}.xyz"), res.atoms, cell, comment=f"label={label} energy={res.final_energy!r}")
    labels = [r["label"] for r in rows]
    freq = {lab: labels.count(lab) / len(labels) for lab in sorted(set(labels))} if labels else {}
    print(json.dumps({"refined": str(out), "n_rows": len(rows), "distinct_minima": len(minima), "label_frequency": freq}, sort_keys=True))
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    _, results = _load_results(cfg, args.results)
    if not results:
        raise ValueError("results file holds no runs")
    grid, _ = cfg.system()
    gs = cfg.resolved_gs_energy()
    summary = {"n_runs": len(results)}
    if gs is None:
        _notice("no ground-state energy configured: histogram relative to the lowest run, TTS omitted")
        ref = min(r.energy for r in results)
    else:
        ref = gs
        stats = bench.run_stats(results, gs, grid.var_species, grid.species_names, cfg.gs_tol, cfg.schedule.n_steps)
        summary.update(stats.as_row())
        if not cfg.record_timing or stats.tau == 0:
            _notice("wall times are zero: TTS is not meaningful")
    bench.histogram(results, ref, cfg.bin_width, grid.var_species, grid.species_names, cfg.target, cfg.path("hist.csv"))
    summary["histogram"] = str(cfg.path("hist.csv"))
    if cfg.target is not None:
        summary["correct_density_fraction"] = bench.correct_density_fraction(results, grid.var_species, cfg.target)
    if cfg.sweep_steps:
        if gs is None:
            _notice("schedule sweep skipped: it needs a ground-state energy")
        else:
            poly = _load_poly(cfg, args.poly)
            schedules = [AnnealSchedule(cfg.schedule.t_max, cfg.schedule.t_min, n) for n in cfg.sweep_steps]
            rows = bench.schedule_sweep(poly, schedules, len(results), gs, cfg.master_seed, cfg.gs_tol, cfg.parallelism, cfg.path("sweep.csv"))
            summary["sweep"] = str(cfg.path("sweep.csv"))
            summary["best_n_steps"] = next(r.n_steps for r in rows if r.best)
    if gs is not None and summary.get("p_gs") == 1.0:
        summary["tts_note"] = "P_GS = 1 regularised with eps = 1/(n_runs + 1)"
    for key in ("tts", "tau"):
        if key in summary and not np.isfinite(summary[key]):
            summary[key] = None
    text = json.dumps(summary, sort_keys=True)
    cfg.path("bench.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_export(cfg: RunConfig, args) -> int:
    grid, cell = cfg.system()
    written = []
    if args.reference:
        from . import systems

        refs = {"FCC": systems.kr_fcc(), "FCC-1": systems.kr_fcc_vacancy()} if cfg.preset == "kr" else {"2H": systems.mos2_2h(), "1T": systems.mos2_1t()}
        for name, atoms in refs.items():
            p = cfg.path(f"ref.{name}.xyz")
            write_extxyz(p, atoms, cell, comment=f"label={name}")
            written.append(str(p))
    else:
        _, results = _load_results(cfg, args.results)
        order = sorted(range(len(results)), key=lambda i: (results[i].energy, i))
        pick = order if args.all else order[:1]
        for i in pick:
            r = results[i]
            p = cfg.path(f"row{i:04d}.xyz")
            write_extxyz(p, decode(r.bits, grid, cell), cell, comment=f"seed={r.seed} energy={r.energy!r}")
            written.append(str(p))
    print(json.dumps({"written": written}))
    return EXIT_OK


COMMANDS = {"build": cmd_build, "anneal": cmd_anneal, "refine": cmd_refine, "bench": cmd_bench, "export": cmd_export}


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hubocsp", description="Lattice crystal-structure search with higher-order binary polynomials.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("config", help="INI config file, or a bundled name (kr, mos2)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config field")
        p.add_argument("-o", "--output-dir", help="override output.directory")
        p.add_argument("--run-id", help="override output.run_id")
        return p

    common(sub.add_parser("build", help="build the polynomial")).add_argument("--poly", help="output polynomial path")
    p = common(sub.add_parser("anneal", help="run a batch of annealing runs"))
    p.add_argument("--poly", help="input polynomial path")
    p.add_argument("--results", help="output CSV path")
    p = common(sub.add_parser("refine", help="relax and label batch results"))
    p.add_argument("--results", help="input CSV path")
    p.add_argument("--output", help="labelled CSV path")
    p = common(sub.add_parser("bench", help="success statistics, histogram, schedule sweep"))
    p.add_argument("--results", help="input CSV path")
    p.add_argument("--poly", help="polynomial for the schedule sweep")
    p = common(sub.add_parser("export", help="write on-grid structures as extended XYZ"))
    p.add_argument("--results", help="input CSV path")
    p.add_argument("--all", action="store_true", help="every row instead of the lowest-energy one")
    p.add_argument("--reference", action="store_true", help="reference structures of the preset")
    return parser


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        overrides = list(args.set)
        if args.output_dir:
            overrides.append(f"output.directory={args.output_dir}")
        if args.run_id:
            overrides.append(f"output.run_id={args.run_id}")
        cfg = read_config(args.config, overrides)
    except UsageError as exc:
        _emit({"error": "usage", "message": str(exc), "exit_code": EXIT_INVALID})
        return EXIT_INVALID
    except ConfigError as exc:
        _emit({"error": "config", "field": exc.field, "message": exc.message, "exit_code": EXIT_INVALID})
        return EXIT_INVALID
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        cfg.path("config.ini").write_text(cfg.dumps())
        return COMMANDS[args.command](cfg, args)
    except (OSError, ValueError, PolynomialFormatError, NotImplementedError) as exc:
        _emit({"error": "runtime", "command": args.command, "type": type(exc).__name__, "message": str(exc), "exit_code": EXIT_RUNTIME})
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
