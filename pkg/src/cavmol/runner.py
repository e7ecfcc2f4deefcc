"""Run orchestration: one validated RunSpec in, files and an exit code out.

Exit codes: 0 success, 2 bad configuration or input file, 3 numerical
contract violated (truncation, dt refinement, compare tolerance), 4 sweep
finished with failed points.  Sweep workers only compute; every file is
written by the parent in sweep-index order with pinned formatting, so a
given config produces byte-identical CSVs at any worker count.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunSpec, resolved_dict
from .dynamics import (
    TimeSeries,
    franck_condon_state,
    max_mean_photons,
    propagate,
    write_timeseries_csv,
)
from .fock import assemble_transformed_hamiltonian
from .grid import (
    grid_propagate,
    franck_condon_grid_state,
    load_curves,
    map_model_to_grid,
    tables_from_curves,
    tables_photostart,
    write_density_snapshot,
)
from .spectra import _swept_model, lambda_sweep, write_eigentable_csv
from .units import HARTREE_PER_EV, HARTREE_PER_WAVENUMBER

__all__ = ["run"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3
EXIT_PARTIAL = 4

_FMT = "{:.11e}"  # twelve significant digits everywhere


def _sample_times(spec: RunSpec) -> np.ndarray:
    n = round(spec.t_final_fs / spec.sample_dt_fs)
    return np.arange(n + 1) * spec.sample_dt_fs


def _write_sidecar(spec: RunSpec, out_dir: str) -> None:
    payload = resolved_dict(spec)
    with open(os.path.join(out_dir, "run.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _series_csv(series: TimeSeries, path: str, channels) -> None:
    """Full export, or just the selected channels in their given order."""
    if channels is None:
        write_timeseries_csv(series, path)
        return
    columns = []
    for name in channels:
        if name == "energy_eV":
            key = "energy"
            scale = 1.0 / HARTREE_PER_EV
        else:
            key = name
            scale = 1.0
        if key not in series.channels:
            raise ConfigError(
                f"channel {name!r} is not produced by this run "
                f"(have: {', '.join(sorted(series.channels))})"
            )
        columns.append(series.channels[key] * scale)
    with open(path, "w") as fh:
        fh.write("time_fs," + ",".join(channels) + "\n")
        for i, t in enumerate(series.times):
            cells = [_FMT.format(t)] + [_FMT.format(col[i]) for col in columns]
            fh.write(",".join(cells) + "\n")


def _spectral_series(model, cavity, basis, times) -> TimeSeries:
    h = assemble_transformed_hamiltonian(model, cavity, basis)
    psi0 = franck_condon_state(model, basis)
    return propagate(h, psi0, times)


def _grid_tables(spec: RunSpec):
    """Tables plus initial state, from the model or from a curve file."""
    if spec.curves_path is not None:
        try:
            curves = load_curves(spec.curves_path)
        except OSError as err:
            raise ConfigError(f"cannot read curve file: {err}")
        except ValueError as err:
            raise ConfigError(str(err))
        tables = tables_from_curves(curves, spec.grid, spec.curve_mass)
        return tables, tables_photostart(tables, spec.grid)
    tables = map_model_to_grid(spec.model, spec.grid)
    return tables, franck_condon_grid_state(spec.model, spec.grid)


def _run_spectrum(spec: RunSpec, out_dir: str, plot: bool) -> int:
    table = lambda_sweep(
        spec.model,
        spec.spectrum_lambdas,
        spec.cavity,
        spec.basis,
        spec.coupling,
        window=spec.window,
    )
    write_eigentable_csv(table, os.path.join(out_dir, "spectrum.csv"))
    if plot:
        from .plots import plot_eigentable

        plot_eigentable(table, os.path.join(out_dir, "spectrum.png"))
    return EXIT_OK


def _run_dynamics(spec: RunSpec, out_dir: str, plot: bool) -> int:
    series = _spectral_series(spec.model, spec.cavity, spec.basis, _sample_times(spec))
    _series_csv(series, os.path.join(out_dir, "dynamics.csv"), spec.channels)
    if plot:
        from .plots import plot_timeseries

        plot_timeseries(series, os.path.join(out_dir, "dynamics.png"))
    return EXIT_OK


def _run_grid_dynamics(spec: RunSpec, out_dir: str, plot: bool) -> int:
    tables, wf0 = _grid_tables(spec)
    result = grid_propagate(
        wf0,
        tables,
        spec.cavity,
        spec.grid,
        spec.t_final_fs,
        sample_dt_fs=spec.sample_dt_fs,
        snapshot_times_fs=spec.snapshot_times_fs,
        max_projection=spec.max_projection,
        check_dt=spec.check_dt,
    )
    _series_csv(result.series, os.path.join(out_dir, "grid_dynamics.csv"), spec.channels)
    for k, snap in enumerate(result.snapshots):
        write_density_snapshot(snap, os.path.join(out_dir, f"snapshot_{k:03d}.dat"))
    if plot:
        from .plots import plot_snapshot, plot_timeseries

        plot_timeseries(result.series, os.path.join(out_dir, "grid_dynamics.png"))
        for k, snap in enumerate(result.snapshots):
            plot_snapshot(snap, os.path.join(out_dir, f"snapshot_{k:03d}.png"))
    return EXIT_OK


_COMPARE_ORDER = ("P_g", "P_e", "mean_photons", "energy", "norm", "autocorr")


def _channel_sort_key(name: str):
    if name in _COMPARE_ORDER:
        return (0, _COMPARE_ORDER.index(name), 0)
    # proj_{n}_{s}
    _, n, s = name.split("_")
    return (1, int(n), 0 if s == "g" else 1)


def _run_compare(spec: RunSpec, out_dir: str, plot: bool) -> int:
    times = _sample_times(spec)
    spectral = _spectral_series(spec.model, spec.cavity, spec.basis, times)
    tables, wf0 = _grid_tables(spec)
    result = grid_propagate(
        wf0,
        tables,
        spec.cavity,
        spec.grid,
        spec.t_final_fs,
        sample_dt_fs=spec.sample_dt_fs,
        max_projection=spec.max_projection,
        check_dt=spec.check_dt,
    )
    _series_csv(spectral, os.path.join(out_dir, "spectral.csv"), spec.channels)
    _series_csv(result.series, os.path.join(out_dir, "grid.csv"), spec.channels)

    common = sorted(
        set(spectral.channels) & set(result.series.channels), key=_channel_sort_key
    )
    worst = 0.0
    with open(os.path.join(out_dir, "difference.csv"), "w") as fh:
        fh.write("channel,max_abs_difference,time_fs_at_max\n")
        for name in common:
            gap = np.abs(spectral.channels[name] - result.series.channels[name])
            k = int(np.argmax(gap))
            fh.write(f"{name},{_FMT.format(gap[k])},{_FMT.format(times[k])}\n")
            worst = max(worst, float(gap[k]))
    if plot:
        from .plots import plot_comparison

        plot_comparison(
            spectral,
            result.series,
            ("number basis", "grid"),
            os.path.join(out_dir, "compare.png"),
        )
    if worst > spec.compare_tolerance:
        print(
            f"compare: max channel deviation {worst:.3e} exceeds "
            f"tolerance {spec.compare_tolerance:.3e}"
        )
        return EXIT_CONTRACT
    return EXIT_OK


def _sweep_points(spec: RunSpec) -> list[dict[str, float]]:
    names = [name for name, _ in spec.sweep_axes]
    grids = [values for _, values in spec.sweep_axes]
    return [dict(zip(names, combo)) for combo in itertools.product(*grids)]


def _apply_point(spec: RunSpec, point: dict[str, float]):
    """Model and cavity for one sweep point.

    The lambda axis keeps the photostart on the classic left turning point:
    the displaced geometry comes from the spectrum-sweep helper (profiles
    re-centered on the new crossing) and q_x follows q_e at the template's
    separation, so the initial vibrational energy is the same at every
    sweep value and only the coupling geometry changes.
    """
    model = spec.model
    cavity = spec.cavity
    if "lambda" in point:
        separation = model.q_e - model.q_x
        model = _swept_model(model, point["lambda"], "full")
        model = replace(model, q_x=model.q_e - separation)
    if "chi" in point:
        cavity = replace(cavity, chi=point["chi"])
    if "omega_c" in point:
        cavity = replace(cavity, omega_c=point["omega_c"])
    return model, cavity


def _sweep_task(args: tuple[RunSpec, dict[str, float]]):
    """One point, run in a worker; never raises, returns (series, error)."""
    spec, point = args
    try:
        model, cavity = _apply_point(spec, point)
        series = _spectral_series(model, cavity, spec.basis, _sample_times(spec))
        return series, None
    except Exception as err:  # surfaced per point, siblings keep running
        return None, f"{type(err).__name__}: {err}"


def _point_label(point: dict[str, float]) -> str:
    parts = []
    for name, value in point.items():
        shown = value / HARTREE_PER_WAVENUMBER if name == "omega_c" else value
        parts.append(f"{name}={shown:g}")
    return " ".join(parts)


def _run_sweep(spec: RunSpec, out_dir: str, plot: bool, workers: int | None) -> int:
    points = _sweep_points(spec)
    tasks = [(spec, point) for point in points]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(points) == 1:
        results = [_sweep_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            results = list(pool.map(_sweep_task, tasks))

    axis_names = [name for name, _ in spec.sweep_axes]
    errors: list[str] = []
    aggregates: list[float] = []
    # omega_c is stored in hartree internally; report it in the unit the
    # config takes it in so the aggregate reads back without conversion.
    header = [
        "omega_c_cm1" if name == "omega_c" else name for name in axis_names
    ] + [
        "max_P_g",
        "max_mean_photons",
        "t_max_mean_photons_fs",
        "final_mean_photons",
        "status",
    ]
    with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
        fh.write(",".join(header) + "\n")
        for index, (point, (series, error)) in enumerate(zip(points, results)):
            cells = [
                _FMT.format(
                    point[name] / HARTREE_PER_WAVENUMBER
                    if name == "omega_c"
                    else point[name]
                )
                for name in axis_names
            ]
            if series is not None:
                _series_csv(
                    series,
                    os.path.join(out_dir, f"point_{index:04d}.csv"),
                    spec.channels,
                )
                photons = series.channels["mean_photons"]
                k = int(np.argmax(photons))
                cells += [
                    _FMT.format(series.channels["P_g"].max()),
                    _FMT.format(photons[k]),
                    _FMT.format(series.times[k]),
                    _FMT.format(photons[-1]),
                    "ok",
                ]
                aggregates.append(float(photons[k]))
            else:
                cells += ["", "", "", "", "failed"]
                aggregates.append(math.nan)
                errors.append(f"point {index:04d} ({_point_label(point)}): {error}")
            fh.write(",".join(cells) + "\n")

    if errors:
        with open(os.path.join(out_dir, "sweep_errors.txt"), "w") as fh:
            fh.write("\n".join(errors) + "\n")
    if plot:
        from .plots import plot_sweep

        plot_sweep(
            axis_names, points, aggregates, os.path.join(out_dir, "sweep.png")
        )
    return EXIT_PARTIAL if errors else EXIT_OK


def run(spec: RunSpec, *, workers: int | None = None, plot: bool = True) -> int:
    """Execute one RunSpec; creates the output directory and all files."""
    out_dir = spec.output_dir
    os.makedirs(out_dir, exist_ok=True)
    _write_sidecar(spec, out_dir)
    if spec.mode == "spectrum":
        return _run_spectrum(spec, out_dir, plot)
    if spec.mode == "dynamics":
        return _run_dynamics(spec, out_dir, plot)
    if spec.mode == "grid-dynamics":
        return _run_grid_dynamics(spec, out_dir, plot)
    if spec.mode == "compare":
        return _run_compare(spec, out_dir, plot)
    if spec.mode == "sweep":
        return _run_sweep(spec, out_dir, plot, workers)
    raise ConfigError(f"unknown mode {spec.mode!r}")  # parse_config forbids this
