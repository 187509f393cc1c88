"""Run configuration: an INI file with one section per pipeline stage.

Every field is validated before any computation starts.  Errors carry the
dotted field path (``schedule.t_max``) so they can be reported as records.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .anneal import AnnealSchedule
from .hubo import PenaltySpec
from .potentials import PotentialModel, load_model

BUNDLED = ("kr", "mos2")
PRESETS = ("kr", "mos2")

DEFAULTS = {
    "system": {"preset": "kr", "g": "4"},
    "potential": {"model": "kr_lj"},
    "hubo": {"method": "direct", "clamp": "none", "reduction_threshold": "none"},
    "penalty": {"kind": "none", "strength": "10", "targets": "", "pair": "", "ratio": "1"},
    "schedule": {"t_max": "1e-2", "t_min": "1e-4", "n_steps": "30"},
    "batch": {"n_runs": "1000", "master_seed": "0", "parallelism": "1", "record_timing": "true"},
    "refine": {"tol_grad": "1e-6", "max_iter": "500", "rattle": "1e-3", "seed": "0", "energy_tol": "1e-3"},
    "bench": {"gs_energy": "auto", "tol": "1e-6", "bin_width": "0.01", "sweep_steps": "", "target": ""},
    "output": {"directory": "out", "run_id": "run"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass
class RunConfig:
    preset: str
    g: int
    model: PotentialModel
    model_ref: str
    method: str
    clamp: float | None
    reduction_threshold: float | None
    penalty: PenaltySpec | None
    schedule: AnnealSchedule
    n_runs: int
    master_seed: int
    parallelism: int
    record_timing: bool
    tol_grad: float
    max_iter: int
    rattle: float
    refine_seed: int
    energy_tol: float
    gs_energy: float | str | None
    gs_tol: float
    bin_width: float
    sweep_steps: tuple[int, ...]
    target: tuple[int, ...] | None
    output_dir: Path
    run_id: str
    parser: configparser.ConfigParser = field(repr=False, default=None)

    def path(self, suffix: str) -> Path:
        return self.output_dir / f"{self.run_id}.{suffix}"

    def system(self):
        """``(grid, cell)`` of the preset."""
        from . import systems

        if self.preset == "kr":
            return systems.kr_grid(self.g), systems.kr_cell()
        return systems.mos2_grid(self.g), systems.mos2_cell()

    def catalog(self):
        from .refine import kr_catalog, mos2_catalog

        return kr_catalog(self.model) if self.preset == "kr" else mos2_catalog(self.model)

    def resolved_gs_energy(self) -> float | None:
        if self.gs_energy == "auto":
            return self.catalog().ground_energy
        return self.gs_energy

    def dumps(self) -> str:
        buf = io.StringIO()
        self.parser.write(buf)
        return buf.getvalue()


def read_config(source: str | Path | None = None, overrides=()) -> RunConfig:
    """Parse a config file (or a bundled name: ``kr``, ``mos2``) plus ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    base = Path(".")
    if source is not None:
        text, base = _config_text(source)
        try:
            cp.read_string(text, source=str(source))
        except configparser.Error as exc:
            raise ConfigError("file", str(exc).replace("\n", " ")) from None
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(key or item, "override must look like section.key=value")
        if section not in DEFAULTS or name not in DEFAULTS[section]:
            raise ConfigError(key, "unknown field")
        cp.set(section, name, value.strip())
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(section, "unknown section")
        for name in cp[section]:
            if name not in DEFAULTS[section]:
                raise ConfigError(f"{section}.{name}", "unknown field")
    return _validate(cp, base)


def _config_text(source) -> tuple[str, Path]:
    if str(source) in BUNDLED and not Path(source).exists():
        return resources.files("hubocsp").joinpath("configs", f"{source}.ini").read_text(), Path(".")
    path = Path(source)
    if not path.is_file():
        raise ConfigError("file", f"config file {str(path)!r} not found")
    return path.read_text(), path.parent


def _get(cp, section, name, conv, check=None, what=""):
    raw = cp.get(section, name).strip()
    try:
        value = conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{name}", f"cannot parse {raw!r}{' as ' + what if what else ''}") from None
    if check is not None and not check(value):
        raise ConfigError(f"{section}.{name}", f"invalid value {raw!r}{': ' + what if what else ''}")
    return value


def _optional_float(raw: str):
    return None if raw.lower() in ("", "none") else float(raw)


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _validate(cp, base: Path) -> RunConfig:
    preset = _get(cp, "system", "preset", str.lower, lambda v: v in PRESETS, f"one of {PRESETS}")
    g = _get(cp, "system", "g", int, lambda v: v >= 1, "positive integer")

    ref = cp.get("potential", "model").strip()
    path = Path(ref)
    if not path.is_absolute() and not path.exists() and (base / path).exists():
        path = base / path
    if ref not in ("kr_lj", "mos2_sw") and not path.is_file():
        raise ConfigError("potential.model", f"parameter file {ref!r} not found")
    try:
        model = load_model(ref if ref in ("kr_lj", "mos2_sw") else path)
    except (ValueError, KeyError) as exc:
        raise ConfigError("potential.model", str(exc)) from None
    needed = ["Kr"] if preset == "kr" else ["Mo", "S"]
    missing = [s for s in needed if s not in model.species]
    if missing:
        raise ConfigError("potential.model", f"model lacks species {missing} required by preset {preset!r}")

    method = _get(cp, "hubo", "method", str.lower, lambda v: v in ("direct", "ie", "inclusion-exclusion"), "direct or ie")
    clamp = _get(cp, "hubo", "clamp", _optional_float, lambda v: v is None or v > 0, "positive or none")
    thr = _get(cp, "hubo", "reduction_threshold", _optional_float, lambda v: v is None or v > 0, "positive or none")

    penalty = _penalty(cp, needed)

    t_max = _get(cp, "schedule", "t_max", float, lambda v: v > 0, "positive")
    t_min = _get(cp, "schedule", "t_min", float, lambda v: 0 < v <= t_max, "0 < t_min <= t_max")
    n_steps = _get(cp, "schedule", "n_steps", int, lambda v: v >= 1, "positive integer")

    gs_raw = cp.get("bench", "gs_energy").strip().lower()
    if gs_raw == "auto":
        gs = "auto"
    else:
        gs = _get(cp, "bench", "gs_energy", _optional_float, None, "number, auto or none")

    target = _get(cp, "bench", "target", _int_list, lambda v: len(v) in (0, len(needed)), f"{len(needed)} counts")

    return RunConfig(
        preset=preset,
        g=g,
        model=model,
        model_ref=ref,
        method=method,
        clamp=clamp,
        reduction_threshold=thr,
        penalty=penalty,
        schedule=AnnealSchedule(t_max, t_min, n_steps),
        n_runs=_get(cp, "batch", "n_runs", int, lambda v: v >= 0, "non-negative integer"),
        master_seed=_get(cp, "batch", "master_seed", int, lambda v: v >= 0, "non-negative integer"),
        parallelism=_get(cp, "batch", "parallelism", int, lambda v: v >= 1, "positive integer"),
        record_timing=_get(cp, "batch", "record_timing", _bool, None, "boolean"),
        tol_grad=_get(cp, "refine", "tol_grad", float, lambda v: v > 0, "positive"),
        max_iter=_get(cp, "refine", "max_iter", int, lambda v: v >= 0, "non-negative integer"),
        rattle=_get(cp, "refine", "rattle", float, lambda v: v >= 0, "non-negative"),
        refine_seed=_get(cp, "refine", "seed", int, lambda v: v >= 0, "non-negative integer"),
        energy_tol=_get(cp, "refine", "energy_tol", float, lambda v: v > 0, "positive"),
        gs_energy=gs,
        gs_tol=_get(cp, "bench", "tol", float, lambda v: v > 0, "positive"),
        bin_width=_get(cp, "bench", "bin_width", float, lambda v: v > 0, "positive"),
        sweep_steps=_get(cp, "bench", "sweep_steps", _int_list, lambda v: all(x >= 1 for x in v), "positive integers"),
        target=target or None,
        output_dir=Path(cp.get("output", "directory").strip() or "."),
        run_id=_get(cp, "output", "run_id", str.strip, lambda v: v and "/" not in v, "non-empty name without '/'"),
        parser=cp,
    )


def _penalty(cp, species: list[str]) -> PenaltySpec | None:
    kind = _get(cp, "penalty", "kind", str.lower, lambda v: v in ("none", "absolute", "relative"), "none, absolute or relative")
    if kind == "none":
        return None
    strength = _get(cp, "penalty", "strength", float, lambda v: v > 0, "positive")
    if kind == "absolute":
        raw = cp.get("penalty", "targets").strip()
        targets = {}
        for item in raw.replace(",", " ").split():
            name, sep, count = item.partition(":")
            if not sep or name not in species:
                raise ConfigError("penalty.targets", f"expected species:count with species in {species}, got {item!r}")
            try:
                targets[name] = int(count)
            except ValueError:
                raise ConfigError("penalty.targets", f"count {count!r} is not an integer") from None
        if not targets:
            raise ConfigError("penalty.targets", "absolute penalty needs species:count targets")
        try:
            return PenaltySpec("absolute", strength, targets=targets)
        except ValueError as exc:
            raise ConfigError("penalty.targets", str(exc)) from None
    pair = tuple(cp.get("penalty", "pair").replace(",", " ").split())
    if len(pair) != 2 or any(p not in species for p in pair):
        raise ConfigError("penalty.pair", f"expected two species from {species}")
    ratio = _get(cp, "penalty", "ratio", float, lambda v: v > 0, "positive")
    try:
        return PenaltySpec("relative", strength, pair=pair, ratio=ratio)
    except ValueError as exc:
        raise ConfigError("penalty.pair", str(exc)) from None
