"""Coordinate-space propagator over (q, x): the cross-validation backend.

Both electronic surfaces live on a shared uniform grid in the molecular
coordinate q (bohr) and the dimensionless photon coordinate x, with
a = (x + d/dx)/sqrt(2) so the radiation term becomes
(omega_c/2)(-d^2/dx^2 + x^2) - omega_c/2; the zero-point subtraction puts
grid and number-state energies on one zero.  Propagation is Strang
split-operator: the (2 x 2)-coupled potential factor is exponentiated in
closed form point by point, the kinetic factor is applied spectrally.
There is no step-size tuning hidden anywhere: accuracy is governed by dt
and checked against the halving contract in `grid_propagate(check_dt=True)`.

Potentials and couplings enter as tables over the q grid, produced either
from an analytic model (`map_model_to_grid`) or from tabulated curve files
(`load_curves` / `tables_from_curves`) for ab-initio-style inputs.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .dynamics import TimeSeries
from .model import (
    CavitySpec,
    HqrModel,
    potential_e,
    potential_g,
    resolved_dc_profile,
    resolved_dipole_profile,
)
from .units import ATOMIC_TIME_PER_FS, Unit, from_atomic, parse_unit, to_atomic

__all__ = [
    "GridSpec",
    "GridWavefunction",
    "TabulatedCurve",
    "GridTables",
    "GridResult",
    "DtConvergenceError",
    "load_curves",
    "write_curves",
    "map_model_to_grid",
    "tables_from_curves",
    "grid_hamiltonian_apply",
    "grid_energy",
    "ground_state_on_grid",
    "franck_condon_grid_state",
    "tables_photostart",
    "photon_projection_grid",
    "position_expectation",
    "x_marginal",
    "interior_node_count",
    "grid_propagate",
    "write_density_snapshot",
    "load_density_snapshot",
]

_NORM_TOL = 1e-8
DEFAULT_MAX_PROJECTION = 12

# canonical unit tag for each recognized curve-file column
_CURVE_COLUMNS = {
    "q": "bohr",
    "V_X": "eV",
    "V_g": "eV",
    "V_e": "eV",
    "d_gg": "au",
    "d_ee": "au",
    "d_ge": "au",
    "V_D": "eV",
}


class DtConvergenceError(ValueError):
    """Halving dt moved the result more than the contract allows."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid over q (bohr) and x (dimensionless).

    The defaults are the reference discretization: 451 points across
    [-6, 9] bohr and 181 points across [-60, 60] in x.
    """

    q_min: float = -6.0
    q_max: float = 9.0
    n_q: int = 451
    x_min: float = -60.0
    x_max: float = 60.0
    n_x: int = 181
    dt_fs: float = 0.01

    def __post_init__(self):
        if self.n_q < 8 or self.n_x < 8:
            raise ValueError("need at least 8 points along each axis")
        if not (self.q_max > self.q_min and self.x_max > self.x_min):
            raise ValueError("grid extents must be ordered")
        if not self.dt_fs > 0.0:
            raise ValueError("dt must be positive")

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular FFT wavenumbers along q and x."""
        k_q = 2.0 * math.pi * np.fft.fftfreq(self.n_q, d=self.dq)
        k_x = 2.0 * math.pi * np.fft.fftfreq(self.n_x, d=self.dx)
        return k_q, k_x


@dataclass
class GridWavefunction:
    """Two-surface wavefunction sampled on a GridSpec, at one instant."""

    psi_g: np.ndarray
    psi_e: np.ndarray
    grid: GridSpec
    time: float = 0.0  # fs

    def __post_init__(self):
        shape = (self.grid.n_q, self.grid.n_x)
        self.psi_g = np.asarray(self.psi_g, dtype=complex)
        self.psi_e = np.asarray(self.psi_e, dtype=complex)
        if self.psi_g.shape != shape or self.psi_e.shape != shape:
            raise ValueError(f"surface arrays must have shape {shape}")

    def norm(self) -> float:
        """Trapezoid-rule norm over both surfaces."""
        total = _integrate2(np.abs(self.psi_g) ** 2, self.grid) + _integrate2(
            np.abs(self.psi_e) ** 2, self.grid
        )
        return math.sqrt(total)

    def density(self, surface: str) -> np.ndarray:
        return np.abs(self.psi_e if surface == "e" else self.psi_g) ** 2


def _integrate2(values: np.ndarray, grid: GridSpec) -> float:
    return float(
        np.trapezoid(np.trapezoid(values, dx=grid.dx, axis=1), dx=grid.dq, axis=0)
    )


@dataclass(frozen=True)
class TabulatedCurve:
    """Cubic interpolant through strictly increasing q samples."""

    name: str
    q: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "values", v)
        if q.ndim != 1 or q.shape != v.shape:
            raise ValueError("q and values must be 1-d arrays of equal length")
        if q.size < 4:
            raise ValueError("cubic interpolation needs at least 4 samples")
        if not np.all(np.diff(q) > 0):
            raise ValueError(f"curve {self.name!r}: q samples must strictly increase")
        from scipy.interpolate import CubicSpline

        object.__setattr__(self, "_spline", CubicSpline(q, v))

    def __call__(self, points) -> np.ndarray:
        return self._spline(points)


def load_curves(path) -> dict[str, TabulatedCurve]:
    """Read a tabulated-curve file into named curves in atomic units.

    The first non-comment line names the columns with unit tags
    (``q:bohr V_g:eV d_ge:au ...``); any subset of the recognized columns
    is allowed as long as q is present.  Rows are whitespace-separated.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    if not body:
        raise ValueError(f"{path}: no header line found")
    tags = body[0].split()
    names: list[str] = []
    units: list[Unit] = []
    for tag in tags:
        if ":" not in tag:
            raise ValueError(f"{path}: column {tag!r} lacks a unit tag")
        name, unit_token = tag.split(":", 1)
        if name not in _CURVE_COLUMNS:
            raise ValueError(
                f"{path}: unknown column {name!r}; expected one of "
                f"{sorted(_CURVE_COLUMNS)}"
            )
        names.append(name)
        units.append(parse_unit(unit_token))
    if "q" not in names:
        raise ValueError(f"{path}: the q column is required")
    rows = []
    for ln in body[1:]:
        cells = ln.split()
        if len(cells) != len(names):
            raise ValueError(
                f"{path}: row has {len(cells)} cells, header names {len(names)}"
            )
        rows.append([float(c) for c in cells])
    if len(rows) < 4:
        raise ValueError(f"{path}: need at least 4 rows for cubic interpolation")
    data = np.asarray(rows)
    columns = {
        name: to_atomic(1.0, unit) * data[:, i]
        for i, (name, unit) in enumerate(zip(names, units))
    }
    q = columns.pop("q")
    if not np.all(np.diff(q) > 0):
        raise ValueError(f"{path}: q samples must strictly increase")
    return {name: TabulatedCurve(name, q, vals) for name, vals in columns.items()}


def write_curves(path, q: np.ndarray, columns: dict[str, np.ndarray]) -> None:
    """Write curves (atomic-unit arrays over q in bohr) with canonical tags."""
    for name in columns:
        if name not in _CURVE_COLUMNS or name == "q":
            raise ValueError(f"unknown curve column {name!r}")
    names = [n for n in _CURVE_COLUMNS if n in columns]
    header = "q:bohr " + " ".join(f"{n}:{_CURVE_COLUMNS[n]}" for n in names)
    lines = [header]
    for i, qi in enumerate(q):
        cells = [f"{qi:.11e}"]
        for n in names:
            value = from_atomic(float(columns[n][i]), parse_unit(_CURVE_COLUMNS[n]))
            cells.append(f"{value:.11e}")
        lines.append(" ".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class GridTables:
    """Potentials and couplings sampled on the q grid (atomic units).

    ``d_gg``/``d_ee`` are permanent-dipole columns that act
    surface-diagonally; ``v_x`` is the photostart surface used only for
    initial-state preparation.
    """

    mass: float
    v_g: np.ndarray
    v_e: np.ndarray
    v_d: np.ndarray
    d_ge: np.ndarray
    d_gg: np.ndarray | None = None
    d_ee: np.ndarray | None = None
    v_x: np.ndarray | None = None


def map_model_to_grid(model: HqrModel, grid: GridSpec) -> GridTables:
    """Sample the analytic surfaces and Gaussian couplings on the q grid."""
    q = grid.q
    w_x = model.omega_x_effective
    return GridTables(
        mass=model.mass,
        v_g=potential_g(model, q),
        v_e=potential_e(model, q),
        v_d=resolved_dc_profile(model)(q),
        d_ge=resolved_dipole_profile(model)(q),
        v_x=0.5 * model.mass * w_x * w_x * (q - model.q_x) ** 2,
    )


def tables_from_curves(
    curves: dict[str, TabulatedCurve], grid: GridSpec, mass: float
) -> GridTables:
    """Evaluate loaded curves on the grid; V_g and V_e are mandatory."""
    for required in ("V_g", "V_e"):
        if required not in curves:
            raise ValueError(f"curve set lacks {required}")
    q = grid.q
    for curve in curves.values():
        if q[0] < curve.q[0] or q[-1] > curve.q[-1]:
            raise ValueError(
                f"grid range [{q[0]}, {q[-1]}] exceeds curve {curve.name!r} "
                f"samples [{curve.q[0]}, {curve.q[-1]}]"
            )

    def maybe(name):
        return curves[name](q) if name in curves else None

    zeros = np.zeros_like(q)
    return GridTables(
        mass=mass,
        v_g=curves["V_g"](q),
        v_e=curves["V_e"](q),
        v_d=curves["V_D"](q) if "V_D" in curves else zeros,
        d_ge=curves["d_ge"](q) if "d_ge" in curves else zeros,
        d_gg=maybe("d_gg"),
        d_ee=maybe("d_ee"),
        v_x=maybe("V_X"),
    )


def _potential_fields(tables: GridTables, cavity: CavitySpec, grid: GridSpec):
    """Diagonal (u_g, u_e) and swap (w) parts of the potential operator."""
    x = grid.x
    photon = 0.5 * cavity.omega_c * (x * x - 1.0)
    drive = cavity.chi * math.sqrt(cavity.omega_c / 2.0) * math.sqrt(2.0) * x
    u_g = tables.v_g[:, None] + photon[None, :]
    u_e = tables.v_e[:, None] + photon[None, :]
    if tables.d_gg is not None:
        u_g = u_g + tables.d_gg[:, None] * drive[None, :]
    if tables.d_ee is not None:
        u_e = u_e + tables.d_ee[:, None] * drive[None, :]
    w = tables.v_d[:, None] + tables.d_ge[:, None] * drive[None, :]
    return u_g, u_e, w


def _kinetic_factors(tables: GridTables, cavity: CavitySpec, grid: GridSpec):
    k_q, k_x = grid.wavenumbers()
    return k_q**2 / (2.0 * tables.mass), 0.5 * cavity.omega_c * k_x**2


def grid_hamiltonian_apply(
    wf: GridWavefunction, tables: GridTables, cavity: CavitySpec, grid: GridSpec
) -> GridWavefunction:
    """One application of the full Hamiltonian (spectral kinetic part)."""
    u_g, u_e, w = _potential_fields(tables, cavity, grid)
    t_q, t_x = _kinetic_factors(tables, cavity, grid)
    kinetic = t_q[:, None] + t_x[None, :]
    out_g = sfft.ifft2(kinetic * sfft.fft2(wf.psi_g)) + u_g * wf.psi_g + w * wf.psi_e
    out_e = sfft.ifft2(kinetic * sfft.fft2(wf.psi_e)) + u_e * wf.psi_e + w * wf.psi_g
    return GridWavefunction(out_g, out_e, grid, wf.time)


def grid_energy(
    wf: GridWavefunction, tables: GridTables, cavity: CavitySpec, grid: GridSpec
) -> float:
    h_wf = grid_hamiltonian_apply(wf, tables, cavity, grid)
    overlap = _integrate2(
        (np.conj(wf.psi_g) * h_wf.psi_g + np.conj(wf.psi_e) * h_wf.psi_e).real, grid
    )
    return overlap


def ground_state_on_grid(v: np.ndarray, mass: float, grid: GridSpec) -> np.ndarray:
    """Lowest eigenfunction of -(1/2M) d2/dq2 + v(q), trapezoid-normalized.

    Dense variational diagonalization with the sinc-basis kinetic matrix on
    the uniform grid; exact to grid resolution, no shooting parameters.
    """
    n = grid.n_q
    if v.shape != (n,):
        raise ValueError("potential must be sampled on the q grid")
    i = np.arange(n)
    diff = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        kin = 2.0 / diff.astype(float) ** 2
    kin[diff == 0] = math.pi**2 / 3.0
    kin *= np.where((diff % 2) == 0, 1.0, -1.0) / (2.0 * mass * grid.dq**2)
    h1 = kin + np.diag(v)
    _, vecs = np.linalg.eigh(h1)
    chi = vecs[:, 0]
    if chi[np.argmax(np.abs(chi))] < 0:
        chi = -chi
    return chi / math.sqrt(np.trapezoid(chi * chi, dx=grid.dq))


def franck_condon_grid_state(model: HqrModel, grid: GridSpec) -> GridWavefunction:
    """Photostart ground state on |e> times the photon vacuum Gaussian."""
    return tables_photostart(map_model_to_grid(model, grid), grid)


def tables_photostart(tables: GridTables, grid: GridSpec) -> GridWavefunction:
    """Vertical photostart for tabulated surfaces: X ground state on |e>,
    photon vacuum along x.  Needs the V_X column."""
    if tables.v_x is None:
        raise ValueError("photostart needs a V_X column in the curve set")
    chi = ground_state_on_grid(tables.v_x, tables.mass, grid)
    x = grid.x
    phi0 = math.pi ** (-0.25) * np.exp(-0.5 * x * x)
    psi_e = chi[:, None] * phi0[None, :]
    wf = GridWavefunction(np.zeros_like(psi_e, dtype=complex), psi_e, grid, 0.0)
    scale = wf.norm()
    wf.psi_e /= scale
    return wf


def _photon_modes(x: np.ndarray, n_max: int) -> np.ndarray:
    """Unit-frequency oscillator eigenfunctions phi_0..phi_n_max on x."""
    modes = np.empty((n_max + 1, x.size))
    modes[0] = math.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if n_max >= 1:
        modes[1] = math.sqrt(2.0) * x * modes[0]
    for n in range(1, n_max):
        modes[n + 1] = math.sqrt(2.0 / (n + 1)) * x * modes[n] - math.sqrt(
            n / (n + 1)
        ) * modes[n - 1]
    return modes


def photon_projection_grid(
    wf: GridWavefunction,
    n_c: int,
    surface: str,
    *,
    max_n_c: int = DEFAULT_MAX_PROJECTION,
) -> float:
    """Weight of photon number n_c on one surface.

    Computes |integral phi_{n_c}(x) Psi_s(q, x) dx|^2 integrated over q.
    """
    if not 0 <= n_c <= max_n_c:
        raise ValueError(f"n_c={n_c} outside the configured range 0..{max_n_c}")
    if surface not in ("g", "e"):
        raise ValueError("surface must be 'g' or 'e'")
    psi = wf.psi_e if surface == "e" else wf.psi_g
    mode = _photon_modes(wf.grid.x, n_c)[n_c]
    overlap = np.trapezoid(mode[None, :] * psi, dx=wf.grid.dx, axis=1)
    return float(np.trapezoid(np.abs(overlap) ** 2, dx=wf.grid.dq))


def position_expectation(wf: GridWavefunction, surface: str) -> float:
    """Mean q over one surface's density, normalized within that surface."""
    rho = wf.density(surface)
    over_x = np.trapezoid(rho, dx=wf.grid.dx, axis=1)
    weight = np.trapezoid(over_x, dx=wf.grid.dq)
    if weight <= 0.0:
        raise ValueError(f"surface {surface!r} carries no density")
    return float(np.trapezoid(wf.grid.q * over_x, dx=wf.grid.dq) / weight)


def x_marginal(wf: GridWavefunction, surface: str) -> np.ndarray:
    """One surface's density integrated over q, resolved along x."""
    return np.trapezoid(wf.density(surface), dx=wf.grid.dq, axis=0)


def interior_node_count(
    values: np.ndarray, *, significance: float = 0.05, dip: float = 0.25
) -> int:
    """Count near-zero local minima between significant lobes of a density.

    Finite sampling and incoherent admixtures fill the exact zeros of a
    Fock-like profile, so a node is taken as an interior local minimum
    lying below `dip` times the smaller flanking lobe.  Lobes under
    `significance` of the global peak are tail ripple and bound nothing.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise ValueError("need a 1d profile with at least 3 samples")
    peak = values.max()
    if peak <= 0.0:
        return 0
    minima, maxima = [], []
    for i in range(1, values.size - 1):
        if values[i] < values[i - 1] and values[i] < values[i + 1]:
            minima.append(i)
        elif values[i] > values[i - 1] and values[i] > values[i + 1]:
            maxima.append(i)
    lobes = [i for i in maxima if values[i] > significance * peak]
    count = 0
    for i in minima:
        left = [j for j in lobes if j < i]
        right = [j for j in lobes if j > i]
        if left and right and values[i] < dip * min(values[left[-1]], values[right[0]]):
            count += 1
    return count


@dataclass(frozen=True)
class GridResult:
    series: TimeSeries
    snapshots: tuple[GridWavefunction, ...] = ()


def _sample_channels(
    wf: GridWavefunction,
    tables: GridTables,
    cavity: CavitySpec,
    grid: GridSpec,
    wf0: GridWavefunction,
    modes: np.ndarray,
) -> dict[str, float]:
    dens_g = np.abs(wf.psi_g) ** 2
    dens_e = np.abs(wf.psi_e) ** 2
    p_g = _integrate2(dens_g, grid)
    p_e = _integrate2(dens_e, grid)
    out = {"P_g": p_g, "P_e": p_e}
    for n_c in range(modes.shape[0]):
        for surface, psi in (("g", wf.psi_g), ("e", wf.psi_e)):
            overlap = np.trapezoid(modes[n_c][None, :] * psi, dx=grid.dx, axis=1)
            out[f"proj_{n_c}_{surface}"] = float(
                np.trapezoid(np.abs(overlap) ** 2, dx=grid.dq)
            )
    # exact mean photon number (x^2 + p_x^2 - 1)/2, independent of the
    # projection cutoff
    x2 = grid.x**2
    mean_x2 = _integrate2((dens_g + dens_e) * x2[None, :], grid)
    _, k_x = grid.wavenumbers()
    weight = grid.dq * grid.dx / grid.n_x
    mean_p2 = 0.0
    for psi in (wf.psi_g, wf.psi_e):
        hat = sfft.fft(psi, axis=1)
        mean_p2 += weight * float(np.sum(k_x[None, :] ** 2 * np.abs(hat) ** 2))
    out["mean_photons"] = 0.5 * (mean_x2 + mean_p2 - (p_g + p_e))
    out["energy"] = grid_energy(wf, tables, cavity, grid)
    out["norm"] = p_g + p_e
    corr = _integrate2(
        (np.conj(wf0.psi_g) * wf.psi_g + np.conj(wf0.psi_e) * wf.psi_e).real, grid
    ) + 1j * _integrate2(
        (np.conj(wf0.psi_g) * wf.psi_g + np.conj(wf0.psi_e) * wf.psi_e).imag, grid
    )
    out["autocorr"] = float(np.abs(corr) ** 2)
    return out


def _split_operator_fields(tables, cavity, grid, dt_atu):
    """Half-step potential propagator (2x2 closed form) + kinetic phase."""
    u_g, u_e, w = _potential_fields(tables, cavity, grid)
    tau = 0.5 * dt_atu
    avg = 0.5 * (u_g + u_e)
    delta = 0.5 * (u_g - u_e)
    theta = np.hypot(delta, w)
    phase = np.exp(-1j * tau * avg)
    cos_part = np.cos(tau * theta)
    sin_over = tau * np.sinc(tau * theta / math.pi)
    p_gg = phase * (cos_part - 1j * sin_over * delta)
    p_ge = phase * (-1j * sin_over * w)
    p_ee = phase * (cos_part + 1j * sin_over * delta)
    t_q, t_x = _kinetic_factors(tables, cavity, grid)
    kin_phase = np.exp(-1j * dt_atu * (t_q[:, None] + t_x[None, :]))
    return p_gg, p_ge, p_ee, kin_phase


def _run_steps(psi_g, psi_e, fields, n_steps):
    p_gg, p_ge, p_ee, kin_phase = fields
    for _ in range(n_steps):
        new_g = p_gg * psi_g + p_ge * psi_e
        new_e = p_ge * psi_g + p_ee * psi_e
        new_g = sfft.ifft2(kin_phase * sfft.fft2(new_g))
        new_e = sfft.ifft2(kin_phase * sfft.fft2(new_e))
        psi_g = p_gg * new_g + p_ge * new_e
        psi_e = p_ge * new_g + p_ee * new_e
    return psi_g, psi_e


def grid_propagate(
    wf0: GridWavefunction,
    tables: GridTables,
    cavity: CavitySpec,
    grid: GridSpec,
    t_final_fs: float,
    *,
    sample_dt_fs: float = 0.1,
    snapshot_times_fs: tuple[float, ...] = (),
    max_projection: int = DEFAULT_MAX_PROJECTION,
    check_dt: bool = False,
) -> GridResult:
    """Split-operator propagation with sampled observables and snapshots.

    Observables follow the number-state backend's definitions; photon
    projections go through the unit-frequency oscillator eigenfunctions up
    to ``max_projection``.  Snapshot requests snap to the nearest sample
    time.  With ``check_dt`` the run is repeated at dt/2 and a
    DtConvergenceError reports the suggested step when P_g(t_final) moves
    by 1e-4 or more.
    """
    if abs(wf0.norm() - 1.0) > _NORM_TOL:
        raise ValueError("initial state norm deviates from 1 beyond 1e-8")
    dt = grid.dt_fs
    stride = max(1, round(sample_dt_fs / dt))
    if abs(stride * dt - sample_dt_fs) > 1e-9:
        raise ValueError(
            f"sample interval {sample_dt_fs} fs is not a multiple of dt={dt} fs"
        )
    n_segments = round(t_final_fs / (stride * dt))
    if abs(n_segments * stride * dt - t_final_fs) > 1e-6:
        raise ValueError(
            f"t_final={t_final_fs} fs is not a multiple of the sample interval"
        )
    fields = _split_operator_fields(tables, cavity, grid, dt * ATOMIC_TIME_PER_FS)
    modes = _photon_modes(grid.x, max_projection)

    times = [0.0]
    rows = [_sample_channels(wf0, tables, cavity, grid, wf0, modes)]
    snap_steps = {round(t / (stride * dt)) for t in snapshot_times_fs}
    snapshots = []
    if 0 in snap_steps:
        snapshots.append(GridWavefunction(wf0.psi_g.copy(), wf0.psi_e.copy(), grid, 0.0))
    psi_g, psi_e = wf0.psi_g.astype(complex), wf0.psi_e.astype(complex)
    for segment in range(1, n_segments + 1):
        psi_g, psi_e = _run_steps(psi_g, psi_e, fields, stride)
        t_now = segment * stride * dt
        wf = GridWavefunction(psi_g, psi_e, grid, t_now)
        times.append(t_now)
        rows.append(_sample_channels(wf, tables, cavity, grid, wf0, modes))
        if segment in snap_steps:
            snapshots.append(GridWavefunction(psi_g.copy(), psi_e.copy(), grid, t_now))

    if check_dt:
        halved = _split_operator_fields(
            tables, cavity, grid, 0.5 * dt * ATOMIC_TIME_PER_FS
        )
        hg, he = _run_steps(
            wf0.psi_g.astype(complex),
            wf0.psi_e.astype(complex),
            halved,
            2 * n_segments * stride,
        )
        p_g_half = _integrate2(np.abs(hg) ** 2, grid)
        drift = abs(p_g_half - rows[-1]["P_g"])
        if drift >= 1e-4:
            raise DtConvergenceError(
                f"halving dt moved P_g({t_final_fs} fs) by {drift:.2e}; "
                f"rerun with dt <= {dt / 2} fs",
                dt / 2,
            )

    channels = {
        name: np.array([row[name] for row in rows]) for name in rows[0]
    }
    series = TimeSeries(times=np.asarray(times), channels=channels, basis=None)
    return GridResult(series=series, snapshots=tuple(snapshots))


def write_density_snapshot(wf: GridWavefunction, path, binary: bool = False) -> None:
    """Persist |psi_s(q, x)|^2 for both surfaces with full grid metadata."""
    g = wf.grid
    if binary:
        with open(path, "wb") as fh:
            fh.write(b"CAVMOLSN")
            fh.write(
                struct.pack(
                    "<QQddddd", g.n_q, g.n_x, g.q_min, g.q_max, g.x_min, g.x_max, wf.time
                )
            )
            fh.write(np.ascontiguousarray(wf.density("g")).tobytes())
            fh.write(np.ascontiguousarray(wf.density("e")).tobytes())
        return
    with open(path, "w") as fh:
        fh.write("# cavmol density snapshot\n")
        fh.write(f"# n_q={g.n_q} n_x={g.n_x}\n")
        fh.write(f"# q_min={g.q_min!r} q_max={g.q_max!r}\n")
        fh.write(f"# x_min={g.x_min!r} x_max={g.x_max!r}\n")
        fh.write(f"# time_fs={wf.time!r}\n")
        for surface in ("g", "e"):
            fh.write(f"# surface={surface}\n")
            np.savetxt(fh, wf.density(surface), fmt="%.17e")


def load_density_snapshot(path) -> dict:
    """Read a snapshot back as arrays plus grid metadata."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic == b"CAVMOLSN":
            n_q, n_x, q_min, q_max, x_min, x_max, time = struct.unpack(
                "<QQddddd", fh.read(8 * 7)
            )
            count = n_q * n_x
            dens_g = np.frombuffer(fh.read(count * 8), dtype=float).reshape(n_q, n_x)
            dens_e = np.frombuffer(fh.read(count * 8), dtype=float).reshape(n_q, n_x)
            return {
                "density_g": dens_g,
                "density_e": dens_e,
                "q_min": q_min,
                "q_max": q_max,
                "x_min": x_min,
                "x_max": x_max,
                "time_fs": time,
            }
    meta: dict = {}
    blocks: dict[str, list[list[float]]] = {}
    current: list[list[float]] | None = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("surface="):
                    current = blocks.setdefault(text.split("=", 1)[1], [])
                else:
                    for token in text.split():
                        if "=" in token:
                            key, value = token.split("=", 1)
                            meta[key] = float(value)
                continue
            if current is None:
                raise ValueError(f"{path}: data before any surface header")
            current.append([float(c) for c in line.split()])
    if set(blocks) != {"g", "e"}:
        raise ValueError(f"{path}: expected g and e surface blocks")
    return {
        "density_g": np.asarray(blocks["g"]),
        "density_e": np.asarray(blocks["e"]),
        "q_min": meta["q_min"],
        "q_max": meta["q_max"],
        "x_min": meta["x_min"],
        "x_max": meta["x_max"],
        "time_fs": meta["time_fs"],
    }
