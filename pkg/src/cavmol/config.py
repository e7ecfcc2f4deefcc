"""Run configuration: sectioned key-value text -> validated RunSpec.

The format is INI-like: `[section]` headers, `key = value` lines, `#`
comments.  Dimensional values carry an explicit unit token ("1350 cm-1",
"1.4 bohr"); everything is converted to atomic units here so the physics
modules never see a unit again.  Errors point at the offending line.

A hand-rolled scanner instead of configparser because the error contract
wants line numbers on unknown keys and bad units, which configparser
discards during interpolation.
"""
from __future__ import annotations

import os.path
import re
from dataclasses import dataclass, replace

from .fock import BasisSpec
from .grid import GridSpec
from .model import CavitySpec, GaussianProfile, HqrModel
from .presets import cah_model, demo_model
from .units import (
    ATOMIC_TIME_PER_FS,
    HARTREE_PER_EV,
    Unit,
    UnitError,
    parse_unit,
    to_atomic,
)

__all__ = ["ConfigError", "RunSpec", "parse_config", "resolved_dict"]

MODES = ("spectrum", "dynamics", "grid-dynamics", "compare", "sweep")

_ENERGY = frozenset({Unit.HARTREE, Unit.EV, Unit.WAVENUMBER})
_LENGTH = frozenset({Unit.BOHR})
_MASS = frozenset({Unit.AMU, Unit.ELECTRON_MASS})
_TIME = frozenset({Unit.FEMTOSECOND, Unit.ATOMIC_TIME})

# key -> (kind, required-unit family or None for dimensionless)
_SCHEMA: dict[str, dict[str, tuple[str, frozenset | None]]] = {
    "model": {
        "preset": ("word", None),
        "curves": ("word", None),
        "omega_g": ("scalar", _ENERGY),
        "omega_e": ("scalar", _ENERGY),
        "omega_ge": ("scalar", _ENERGY),
        "omega_x": ("scalar", _ENERGY),
        "mass": ("scalar", _MASS),
        "q_e": ("scalar", _LENGTH),
        "q_x": ("scalar", _LENGTH),
        "dc_amplitude": ("scalar", _ENERGY),
        "dc_width": ("scalar", _LENGTH),
        "dc_center": ("scalar", _LENGTH),
        "dipole_peak": ("scalar", None),
        "dipole_width": ("scalar", _LENGTH),
        "dipole_center": ("scalar", _LENGTH),
    },
    "cavity": {
        "omega_c": ("scalar", _ENERGY),
        "chi": ("scalar", None),
    },
    "basis": {
        "n_vib": ("int", None),
        "n_fock": ("int", None),
    },
    "grid": {
        "q_min": ("scalar", _LENGTH),
        "q_max": ("scalar", _LENGTH),
        "n_q": ("int", None),
        "x_min": ("scalar", None),
        "x_max": ("scalar", None),
        "n_x": ("int", None),
        "dt": ("scalar", _TIME),
    },
    "run": {
        "mode": ("word", None),
        "t_final": ("scalar", _TIME),
        "sample_dt": ("scalar", _TIME),
        "snapshots": ("list", _TIME),
        "lambda": ("list", None),
        "window": ("list", _ENERGY),
        "coupling": ("word", None),
        "tolerance": ("scalar", None),
        "max_projection": ("int", None),
        "check_dt": ("flag", None),
    },
    "sweep": {
        "lambda": ("list", None),
        "chi": ("list", None),
        "omega_c": ("list", _ENERGY),
    },
    "output": {
        "directory": ("word", None),
        "channels": ("words", None),
    },
}

_UNIT_FAMILY_HINT = {
    id(_ENERGY): "an energy unit (eV, cm-1, hartree)",
    id(_LENGTH): "a length unit (bohr)",
    id(_MASS): "a mass unit (amu, me)",
    id(_TIME): "a time unit (fs, atu)",
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class RunSpec:
    """Fully resolved description of one invocation.

    All numbers are atomic units except the time keys, which stay in
    femtoseconds because that is what the propagators take.
    """

    mode: str
    cavity: CavitySpec
    basis: BasisSpec
    model: HqrModel | None = None
    curves_path: str | None = None
    curve_mass: float | None = None
    grid: GridSpec | None = None
    t_final_fs: float = 35.0
    sample_dt_fs: float = 0.1
    snapshot_times_fs: tuple[float, ...] = ()
    spectrum_lambdas: tuple[float, ...] = ()
    window: tuple[float, float] | None = None
    coupling: str = "full"
    compare_tolerance: float = 1e-3
    max_projection: int = 12
    check_dt: bool = False
    sweep_axes: tuple[tuple[str, tuple[float, ...]], ...] = ()
    output_dir: str = "cavmol-out"
    channels: tuple[str, ...] | None = None


def _scan(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    """Split into sections; validate section and key names against the schema."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(
                    f"unknown section [{name}] (expected one of: "
                    f"{', '.join(sorted(_SCHEMA))})",
                    lineno,
                )
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value' or a [section] header", lineno)
        if current is None:
            raise ConfigError("key outside any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigError(
                f"unknown key {key!r} in [{current}] (expected one of: "
                f"{', '.join(sorted(_SCHEMA[current]))})",
                lineno,
            )
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        if not value:
            raise ConfigError(f"key {key!r} has no value", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _number(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"expected a number, got {token!r}", line)


def _scalar(value: str, family: frozenset | None, line: int) -> float:
    """Parse '<number> [unit]' into atomic units (fs for time keys)."""
    tokens = value.split()
    if len(tokens) > 2:
        raise ConfigError(f"expected 'number [unit]', got {value!r}", line)
    number = _number(tokens[0], line)
    if family is None:
        if len(tokens) == 2 and parse_unit_or_err(tokens[1], line) is not Unit.DIMENSIONLESS:
            # "au" is tolerated for dimensionless dipole-like quantities
            if tokens[1].strip().lower() != "au":
                raise ConfigError(
                    f"key takes a bare number, got unit {tokens[1]!r}", line
                )
        return number
    if len(tokens) != 2:
        raise ConfigError(
            f"value {value!r} needs {_UNIT_FAMILY_HINT[id(family)]}", line
        )
    unit = parse_unit_or_err(tokens[1], line)
    if unit not in family:
        raise ConfigError(
            f"unit {tokens[1]!r} is not {_UNIT_FAMILY_HINT[id(family)]}", line
        )
    atomic = to_atomic(number, unit)
    if family is _TIME:
        return atomic / ATOMIC_TIME_PER_FS  # propagators speak femtoseconds
    return atomic


def parse_unit_or_err(token: str, line: int) -> Unit:
    try:
        return parse_unit(token)
    except UnitError as err:
        raise ConfigError(str(err), line)


def _expand_range(item: str, line: int) -> list[float]:
    parts = item.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range syntax is start:stop:step, got {item!r}", line)
    start, stop, step = (_number(p, line) for p in parts)
    if step <= 0 or stop < start:
        raise ConfigError("range needs stop >= start and step > 0", line)
    count = int((stop - start) / step + 1e-9) + 1
    return [start + k * step for k in range(count)]


def _value_list(value: str, family: frozenset | None, line: int) -> tuple[float, ...]:
    out: list[float] = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            raise ConfigError("empty list item", line)
        if ":" in item:
            if family is not None:
                raise ConfigError(
                    "range syntax is only for dimensionless lists", line
                )
            out.extend(_expand_range(item, line))
        else:
            out.append(_scalar(item, family, line))
    return tuple(out)


class _Section:
    """Typed, line-aware access to one scanned section."""

    def __init__(self, name: str, raw: dict[str, tuple[str, int]]):
        self.name = name
        self.raw = dict(raw)

    def line(self, key: str) -> int | None:
        return self.raw[key][1] if key in self.raw else None

    def has(self, key: str) -> bool:
        return key in self.raw

    def take(self, key: str, default=None):
        kind, family = _SCHEMA[self.name][key]
        if key not in self.raw:
            return default
        value, line = self.raw.pop(key)
        if kind == "word":
            return value
        if kind == "words":
            return tuple(t.strip() for t in value.split(",") if t.strip())
        if kind == "int":
            number = _number(value, line)
            if number != int(number):
                raise ConfigError(f"key {key!r} takes an integer", line)
            return int(number)
        if kind == "flag":
            token = value.lower()
            if token in ("on", "true", "yes", "1"):
                return True
            if token in ("off", "false", "no", "0"):
                return False
            raise ConfigError(f"key {key!r} takes on/off", line)
        if kind == "list":
            return _value_list(value, family, line)
        return _scalar(value, family, line)

    def require(self, key: str, section_line: int | None = None):
        if key not in self.raw:
            raise ConfigError(
                f"[{self.name}] is missing required key {key!r}", section_line
            )
        return self.take(key)


_PRESETS = {"demo": demo_model, "cah": cah_model}


def _build_model(sec: _Section) -> tuple[HqrModel | None, str | None, float | None]:
    """Model section -> (model, curves path, curve mass); exactly one route."""
    curves = sec.take("curves")
    if curves is not None:
        mass = sec.take("mass")
        if mass is None:
            raise ConfigError(
                "[model] curve-backed runs still need 'mass' (the file has none)"
            )
        leftovers = list(sec.raw)
        if leftovers:
            raise ConfigError(
                f"key {leftovers[0]!r} conflicts with 'curves'; curve-backed "
                "runs take their geometry from the file",
                sec.line(leftovers[0]),
            )
        return None, curves, mass

    preset_line = sec.line("preset")
    preset = sec.take("preset")
    if preset is not None:
        if preset not in _PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r} (expected demo or cah)", preset_line
            )
        model = _PRESETS[preset]()
    else:
        missing = [
            k for k in ("omega_g", "omega_e", "omega_ge", "mass", "q_e") if not sec.has(k)
        ]
        if missing:
            raise ConfigError(
                f"[model] without a preset needs keys: {', '.join(missing)}"
            )
        model = HqrModel(
            omega_g=sec.take("omega_g"),
            omega_e=sec.take("omega_e"),
            omega_ge=sec.take("omega_ge"),
            mass=sec.take("mass"),
            q_e=sec.take("q_e"),
        )

    plain = {}
    for key in ("omega_g", "omega_e", "omega_ge", "mass", "q_e", "q_x", "omega_x"):
        if sec.has(key):
            plain[key] = sec.take(key)
    dc = model.dc_profile
    if sec.has("dc_amplitude"):
        dc = replace(dc, amplitude=sec.take("dc_amplitude"))
    if sec.has("dc_width"):
        dc = replace(dc, width=sec.take("dc_width"))
    if sec.has("dc_center"):
        dc = replace(dc, center=sec.take("dc_center"))
    dip = model.dipole_profile
    if sec.has("dipole_peak"):
        dip = replace(dip, amplitude=sec.take("dipole_peak"))
    if sec.has("dipole_width"):
        dip = replace(dip, width=sec.take("dipole_width"))
    if sec.has("dipole_center"):
        dip = replace(dip, center=sec.take("dipole_center"))
    try:
        model = replace(model, dc_profile=dc, dipole_profile=dip, **plain)
    except ValueError as err:
        raise ConfigError(f"[model] {err}")
    return model, None, None


def parse_config(
    text: str, *, base_dir: str | None = None, default_mode: str | None = None
) -> RunSpec:
    """Validate the configuration text and resolve every unit and default.

    `default_mode` fills in when [run] has no mode key (the CLI passes its
    subcommand); an explicit key always wins and a mismatch is the caller's
    problem to detect.
    """
    sections = _scan(text)
    for required in ("model", "cavity"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    model_sec = _Section("model", sections.get("model", {}))
    model, curves_path, curve_mass = _build_model(model_sec)
    if curves_path is not None and base_dir is not None and not os.path.isabs(curves_path):
        curves_path = os.path.join(base_dir, curves_path)

    cav = _Section("cavity", sections["cavity"])
    cav_line = cav.line("chi")
    omega_c = cav.require("omega_c")
    chi = cav.require("chi")
    if chi < 0:
        raise ConfigError("chi must be non-negative", cav_line)
    try:
        cavity = CavitySpec(omega_c=omega_c, chi=chi)
    except ValueError as err:
        raise ConfigError(f"[cavity] {err}")

    bas = _Section("basis", sections.get("basis", {}))
    try:
        basis = BasisSpec(n_vib=bas.take("n_vib", 110), n_fock=bas.take("n_fock", 11))
    except ValueError as err:
        raise ConfigError(f"[basis] {err}")

    run = _Section("run", sections.get("run", {}))
    mode_line = run.line("mode")
    mode = run.take("mode", default_mode)
    if mode is None:
        raise ConfigError("[run] needs a mode (or invoke a CLI subcommand)")
    if mode not in MODES:
        raise ConfigError(
            f"unknown mode {mode!r} (expected one of: {', '.join(MODES)})", mode_line
        )

    grid = None
    if "grid" in sections or mode in ("grid-dynamics", "compare"):
        g = _Section("grid", sections.get("grid", {}))
        defaults = GridSpec()
        try:
            grid = GridSpec(
                q_min=g.take("q_min", defaults.q_min),
                q_max=g.take("q_max", defaults.q_max),
                n_q=g.take("n_q", defaults.n_q),
                x_min=g.take("x_min", defaults.x_min),
                x_max=g.take("x_max", defaults.x_max),
                n_x=g.take("n_x", defaults.n_x),
                dt_fs=g.take("dt", defaults.dt_fs),
            )
        except ValueError as err:
            raise ConfigError(f"[grid] {err}")

    t_final = run.take("t_final", 35.0)
    sample_dt = run.take("sample_dt", 0.1)
    if t_final <= 0 or sample_dt <= 0:
        raise ConfigError("[run] t_final and sample_dt must be positive",
                          run.line("t_final") or run.line("sample_dt"))
    n_samples = round(t_final / sample_dt)
    if abs(n_samples * sample_dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ConfigError(
            f"[run] t_final={t_final} fs is not a multiple of sample_dt={sample_dt} fs"
        )
    snapshots = run.take("snapshots", ())
    for t in snapshots:
        if not (0.0 <= t <= t_final):
            raise ConfigError(
                f"snapshot time {t} fs lies outside [0, {t_final}]",
                run.line("snapshots"),
            )

    lambdas = run.take("lambda")
    window_line = run.line("window")
    window_vals = run.take("window")
    if window_vals is not None and len(window_vals) != 2:
        raise ConfigError("window takes exactly two energies", window_line)
    coupling_line = run.line("coupling")
    coupling = run.take("coupling", "full")
    if coupling not in ("full", "constant_dipole_no_dc"):
        raise ConfigError(
            f"unknown coupling mode {coupling!r} "
            "(expected full or constant_dipole_no_dc)",
            coupling_line,
        )
    tolerance = run.take("tolerance", 1e-3)
    if tolerance <= 0:
        raise ConfigError("tolerance must be positive", run.line("tolerance"))
    max_projection = run.take("max_projection", 12)
    check_dt = run.take("check_dt", False)

    if mode == "spectrum":
        if lambdas is None:
            lambdas = tuple(-6.0 + 0.25 * k for k in range(49))
        if not lambdas:
            raise ConfigError("[run] spectrum mode needs a non-empty lambda list",
                              run.line("lambda"))
        if window_vals is None:
            window_vals = (1.0 * HARTREE_PER_EV, 1.8 * HARTREE_PER_EV)
    elif lambdas is not None:
        raise ConfigError(
            "[run] the lambda key belongs to spectrum mode (sweeps go in [sweep])",
            run.line("lambda"),
        )
    else:
        lambdas = ()

    axes: list[tuple[str, tuple[float, ...]]] = []
    if "sweep" in sections:
        sw = _Section("sweep", sections["sweep"])
        for key in list(sw.raw):  # declaration order defines the product order
            line = sw.line(key)
            values = sw.take(key)
            if key == "chi" and any(v < 0 for v in values):
                raise ConfigError("sweep chi values must be non-negative", line)
            if key == "omega_c" and any(v <= 0 for v in values):
                raise ConfigError("sweep omega_c values must be positive", line)
            if not values:
                raise ConfigError(f"sweep axis {key!r} is empty", line)
            axes.append((key, values))
    if mode == "sweep" and not axes:
        raise ConfigError("sweep mode needs a non-empty [sweep] section", mode_line)
    if mode != "sweep" and axes:
        raise ConfigError(
            f"[sweep] axes are only valid in sweep mode, not {mode!r}", mode_line
        )

    if curves_path is not None and mode != "grid-dynamics":
        raise ConfigError(
            f"curve-backed models only run in grid-dynamics mode, not {mode!r}"
        )

    out = _Section("output", sections.get("output", {}))
    directory = out.take("directory", "cavmol-out")
    channels = out.take("channels")
    if channels is not None:
        for name in channels:
            if not re.fullmatch(r"P_g|P_e|mean_photons|energy_eV|norm|autocorr|proj_\d+_[ge]", name):
                raise ConfigError(
                    f"unknown channel {name!r} in [output] channels",
                    out.line("channels"),
                )
    if base_dir is not None and not os.path.isabs(directory):
        directory = os.path.join(base_dir, directory)

    return RunSpec(
        mode=mode,
        cavity=cavity,
        basis=basis,
        model=model,
        curves_path=curves_path,
        curve_mass=curve_mass,
        grid=grid,
        t_final_fs=t_final,
        sample_dt_fs=sample_dt,
        snapshot_times_fs=tuple(snapshots),
        spectrum_lambdas=tuple(lambdas),
        window=tuple(window_vals) if window_vals is not None else None,
        coupling=coupling,
        compare_tolerance=tolerance,
        max_projection=max_projection,
        check_dt=check_dt,
        sweep_axes=tuple(axes),
        output_dir=directory,
        channels=channels,
    )


def _profile_dict(profile: GaussianProfile) -> dict:
    return {
        "amplitude": profile.amplitude,
        "width": profile.width,
        "center": profile.center,
    }


def resolved_dict(spec: RunSpec) -> dict:
    """Sidecar payload: every default materialized, atomic units throughout
    (keys ending in _fs are femtoseconds)."""
    if spec.model is not None:
        model: dict | None = {
            "omega_g": spec.model.omega_g,
            "omega_e": spec.model.omega_e,
            "omega_ge": spec.model.omega_ge,
            "omega_x": spec.model.omega_x,
            "mass": spec.model.mass,
            "q_e": spec.model.q_e,
            "q_x": spec.model.q_x,
            "dc_profile": _profile_dict(spec.model.dc_profile),
            "dipole_profile": _profile_dict(spec.model.dipole_profile),
        }
    else:
        model = None
    grid = None
    if spec.grid is not None:
        grid = {
            "q_min": spec.grid.q_min,
            "q_max": spec.grid.q_max,
            "n_q": spec.grid.n_q,
            "x_min": spec.grid.x_min,
            "x_max": spec.grid.x_max,
            "n_x": spec.grid.n_x,
            "dt_fs": spec.grid.dt_fs,
        }
    return {
        "mode": spec.mode,
        "model": model,
        "curves": (
            {"path": spec.curves_path, "mass": spec.curve_mass}
            if spec.curves_path is not None
            else None
        ),
        "cavity": {"omega_c": spec.cavity.omega_c, "chi": spec.cavity.chi},
        "basis": {"n_vib": spec.basis.n_vib, "n_fock": spec.basis.n_fock},
        "grid": grid,
        "run": {
            "t_final_fs": spec.t_final_fs,
            "sample_dt_fs": spec.sample_dt_fs,
            "snapshot_times_fs": list(spec.snapshot_times_fs),
            "lambda": list(spec.spectrum_lambdas),
            "window": list(spec.window) if spec.window is not None else None,
            "coupling": spec.coupling,
            "tolerance": spec.compare_tolerance,
            "max_projection": spec.max_projection,
            "check_dt": spec.check_dt,
        },
        "sweep": {name: list(values) for name, values in spec.sweep_axes},
        "output": {
            "directory": spec.output_dir,
            "channels": list(spec.channels) if spec.channels is not None else None,
        },
    }
