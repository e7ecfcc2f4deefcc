"""Franck-Condon preparation, spectral propagation, time-resolved observables.

The propagator diagonalizes the Hamiltonian once and applies
``W exp(-i L t) W^dag`` at every requested time, so there is no step-size
error: accuracy is set entirely by the eigendecomposition.  States prepared
here live in the surface-adapted representation (each electronic surface
carries its own oscillator ladder); pair them with
``assemble_transformed_hamiltonian``, or push them through
``lab_frame_state`` before propagating with the lab-frame assembly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    BasisSpec,
    OperatorMatrix,
    TruncationError,
    displacement_matrix,
    squeeze_matrix,
    surface_to_lab_matrix,
)
from .model import HqrModel
from .spectra import diagonalize
from .units import ATOMIC_TIME_PER_FS, HARTREE_PER_EV

__all__ = [
    "PolaritonState",
    "TimeSeries",
    "franck_condon_state",
    "lab_frame_state",
    "propagate",
    "observables",
    "wavepacket_period",
    "max_mean_photons",
    "write_timeseries_csv",
]

_NORM_TOL = 1e-9
# a lag only counts as a revival when the normalized squared-difference
# dips below this fraction of its mean level
_DIP_FLOOR = 0.3


@dataclass(frozen=True)
class PolaritonState:
    """Normalized state vector over a BasisSpec ordering at one instant."""

    amplitudes: np.ndarray
    basis: BasisSpec
    time: float = 0.0  # fs

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, basis dim {self.basis.dim}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm:.12f} deviates from 1 beyond 1e-9")


@dataclass(frozen=True)
class TimeSeries:
    """Observable traces on a common time grid.

    ``channels`` maps names to real arrays aligned with ``times`` (fs).
    Energies are stored in hartree; the CSV exporter converts to eV.
    """

    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    basis: BasisSpec | None = None
    states: tuple[PolaritonState, ...] | None = None


def franck_condon_state(model: HqrModel, basis: BasisSpec) -> PolaritonState:
    """Vertical photoexcitation: X-surface vibrational ground state on |e>.

    The photon register starts in vacuum and the electronic register in
    |e>.  Vibrational amplitudes are the overlaps of the X-surface ground
    state with the upper-surface ladder, built by displacing (q_x - q_e)
    and squeezing (omega_x vs omega_e) the vacuum vector.

    Raises TruncationError when the retained ladder misses more than 1e-6
    of the overlap weight.
    """
    nv = basis.n_vib
    lam = (model.q_x - model.q_e) * math.sqrt(model.mass * model.omega_e / 2.0)
    r = 0.5 * math.log(model.omega_x_effective / model.omega_e)
    coeff = np.zeros(nv)
    coeff[0] = 1.0
    if r != 0.0:
        coeff = squeeze_matrix(r, nv) @ coeff
    if lam != 0.0:
        coeff = displacement_matrix(lam, nv) @ coeff
    deficit = 1.0 - float(coeff @ coeff)
    if deficit > 1e-6:
        raise TruncationError(
            f"Franck-Condon overlap misses {deficit:.2e} of the weight "
            f"at n_vib={nv}",
            nv + max(8, nv // 2),
        )
    coeff = coeff / np.linalg.norm(coeff)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index(0, 1, 0) : basis.index(0, 1, 0) + nv] = coeff
    return PolaritonState(amps, basis, time=0.0)


def lab_frame_state(state: PolaritonState, model: HqrModel) -> PolaritonState:
    """Map a surface-adapted state onto the shared lab-frame ladder."""
    u = surface_to_lab_matrix(model, state.basis)
    return PolaritonState(u @ state.amplitudes, state.basis, state.time)


def _channel_table(
    amps: np.ndarray, h_entries: np.ndarray, amps0: np.ndarray, basis: BasisSpec
) -> dict[str, np.ndarray]:
    n_t = amps.shape[0]
    prob = np.abs(amps) ** 2
    proj = prob.reshape(n_t, basis.n_fock, 2, basis.n_vib).sum(axis=3)
    channels: dict[str, np.ndarray] = {
        "P_g": proj[:, :, 0].sum(axis=1),
        "P_e": proj[:, :, 1].sum(axis=1),
    }
    for n_c in range(basis.n_fock):
        channels[f"proj_{n_c}_g"] = proj[:, n_c, 0]
        channels[f"proj_{n_c}_e"] = proj[:, n_c, 1]
    channels["mean_photons"] = proj.sum(axis=2) @ np.arange(basis.n_fock, dtype=float)
    h_amps = amps @ h_entries.conj().T
    channels["energy"] = np.einsum("ti,ti->t", amps.conj(), h_amps).real
    channels["norm"] = prob.sum(axis=1)
    channels["autocorr"] = np.abs(amps @ amps0.conj()) ** 2
    return channels


def propagate(
    h: OperatorMatrix,
    psi0: PolaritonState,
    times,
    *,
    store_states: bool = False,
) -> TimeSeries:
    """Evolve psi0 under the time-independent Hamiltonian h.

    Parameters
    ----------
    h : OperatorMatrix
        Hermitian generator in the same representation as psi0.
    psi0 : PolaritonState
    times : array_like
        Report times in fs; need not start at zero or be uniform.
    store_states : bool
        Keep the full state vector at every report time.

    Returns
    -------
    TimeSeries
        Channels P_g, P_e, proj_{n_c}_{s}, mean_photons, energy (hartree),
        norm and autocorr, plus the stored states when requested.
    """
    if h.dim != psi0.basis.dim:
        raise ValueError(f"operator dim {h.dim} does not match basis {psi0.basis.dim}")
    t_fs = np.asarray(times, dtype=float)
    if t_fs.ndim != 1 or t_fs.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    evals, evecs = diagonalize(h)
    c0 = evecs.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(t_fs * ATOMIC_TIME_PER_FS, evals))
    amps = (phases * c0) @ evecs.T
    channels = _channel_table(amps, h.entries, psi0.amplitudes, psi0.basis)
    states = None
    if store_states:
        states = tuple(
            PolaritonState(amps[i], psi0.basis, time=float(t_fs[i]))
            for i in range(t_fs.size)
        )
    return TimeSeries(times=t_fs, channels=channels, basis=psi0.basis, states=states)


def observables(state: PolaritonState, h: OperatorMatrix) -> dict:
    """Population, projection and photon observables of a single state."""
    if h.dim != state.basis.dim:
        raise ValueError(f"operator dim {h.dim} does not match basis {state.basis.dim}")
    table = _channel_table(
        state.amplitudes[None, :], h.entries, state.amplitudes, state.basis
    )
    proj = np.empty((state.basis.n_fock, 2))
    for n_c in range(state.basis.n_fock):
        proj[n_c, 0] = table[f"proj_{n_c}_g"][0]
        proj[n_c, 1] = table[f"proj_{n_c}_e"][0]
    return {
        "P_g": float(table["P_g"][0]),
        "P_e": float(table["P_e"][0]),
        "proj": proj,
        "mean_photons": float(table["mean_photons"][0]),
        "energy": float(table["energy"][0]),
    }


def wavepacket_period(series: TimeSeries, channel: str, *, floor: float = _DIP_FLOOR) -> float:
    """Dominant revival period of one channel, in fs.

    Self-alignment is scored by the length-normalized squared-difference
    function d(k) = sum_i (x_i - x_{i+k})^2 / (n - k), whose first deep
    local minimum marks the period; a parabolic fit through the
    neighboring lags refines it below the sampling step.  Differencing
    cancels the constant background that tilts plain autocorrelation on
    short windows.  Returns NaN when the channel is constant or no dip
    falls below ``floor`` times the mean difference level, which flags an
    undefined period.
    """
    x = np.asarray(series.channels[channel], dtype=float)
    t = np.asarray(series.times, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError("need at least 8 samples to estimate a period")
    steps = np.diff(t)
    dt = steps[0]
    if np.max(np.abs(steps - dt)) > 1e-9 * max(abs(dt), 1e-30):
        raise ValueError("period estimation needs a uniform time grid")
    if np.max(np.abs(x - x[0])) <= 1e-12 * max(1.0, np.max(np.abs(x))):
        return math.nan
    k_max = n // 2
    squares = np.concatenate(([0.0], np.cumsum(x * x)))
    ac = np.correlate(x, x, mode="full")[n - 1 : n - 1 + k_max]
    lags = np.arange(k_max)
    d = (squares[n] - squares[lags] + squares[n - lags] - 2.0 * ac) / (n - lags)
    threshold = floor * d[1:].mean()
    for k in range(2, k_max - 1):
        if d[k] <= d[k - 1] and d[k] < d[k + 1] and d[k] < threshold:
            a, b, c = d[k - 1], d[k], d[k + 1]
            curv = a - 2.0 * b + c
            shift = 0.5 * (a - c) / curv if curv != 0.0 else 0.0
            return float((k + shift) * dt)
    return math.nan


def max_mean_photons(series: TimeSeries, window: tuple[float, float]) -> float:
    """Largest mean photon number inside the closed window [t0, t1] fs."""
    t0, t1 = window
    mask = (series.times >= t0) & (series.times <= t1)
    if not np.any(mask):
        raise ValueError(f"no samples inside window [{t0}, {t1}] fs")
    return float(np.max(series.channels["mean_photons"][mask]))


def write_timeseries_csv(series: TimeSeries, path) -> None:
    """Write the population table: time, populations, projections, photons.

    Columns: time_fs, P_g, P_e, proj_{n_c}_{s} in photon-major order,
    mean_photons, energy_eV.  Twelve significant digits throughout.  The
    projection columns are discovered from the channel names, so series
    from either propagation backend export identically.
    """
    proj_count = sum(1 for name in series.channels if name.startswith("proj_")) // 2
    names = ["P_g", "P_e"]
    for n_c in range(proj_count):
        names += [f"proj_{n_c}_g", f"proj_{n_c}_e"]
    names += ["mean_photons", "energy"]
    header = "time_fs," + ",".join(n if n != "energy" else "energy_eV" for n in names)
    lines = [header]
    for i, t in enumerate(series.times):
        cells = [f"{t:.11e}"]
        for name in names:
            value = series.channels[name][i]
            if name == "energy":
                value = value / HARTREE_PER_EV
            cells.append(f"{value:.11e}")
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
