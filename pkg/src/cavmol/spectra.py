"""Eigenvalue sweeps, polariton doublet extraction and dressed curves.

Everything here is stationary-state analysis: diagonalization of assembled
Hamiltonians, scans of the spectrum against the displacement parameter
(with the coupling profiles re-centered on the moving curve crossing), and
the photon-dressed potential curves whose intersections organize the
dynamics (one electrostatic crossing, one rotating and one counter-rotating
light-induced crossing per photon manifold).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np
from scipy.linalg import eigh

from .fock import BasisSpec, OperatorMatrix, assemble_hamiltonian
from .model import (
    CavitySpec,
    GaussianProfile,
    HqrModel,
    NoCrossingError,
    crossing_point,
    dressed_crossing,
    potential_e,
    potential_g,
)
from .units import HARTREE_PER_EV

__all__ = [
    "EigenTable",
    "CrossingGeometry",
    "diagonalize",
    "lambda_sweep",
    "rabi_splitting",
    "dressed_curves",
    "open_channel_count",
    "write_eigentable_csv",
]

_HERMITICITY_TOL = 1e-12

SweepCouplings = Literal["full", "constant_dipole_no_dc"]


@dataclass(frozen=True)
class EigenTable:
    """Eigenvalues (and optionally eigenvectors) along a parameter sweep.

    `energies` is NaN-padded on the right where the retained-state count
    varies between sweep points (a fixed energy window keeps a different
    number of states at each parameter value).  Rows are sorted ascending.
    """

    parameter: str
    values: np.ndarray
    energies: np.ndarray
    counts: np.ndarray
    window: tuple[float, float] | None = None
    eigenvectors: tuple[np.ndarray, ...] | None = None
    basis: BasisSpec | None = None

    def row(self, i: int) -> np.ndarray:
        """Valid (unpadded) energies at sweep point i."""
        return self.energies[i, : self.counts[i]]


@dataclass(frozen=True)
class CrossingGeometry:
    """Positions and energies of all curve crossings below a photon cutoff.

    Rotating light-induced crossings pair |n_c+1; g> with |n_c; e>, the
    counter-rotating ones pair |n_c; g> with |n_c+1; e>; each entry is
    labeled by that n_c.  All pairings of one kind share a position because
    the dressed curves of a manifold differ only by a constant.
    """

    dc_position: float
    dc_energy: float
    lic_r_positions: tuple[tuple[int, float], ...]
    lic_r_energies: tuple[float, ...]
    lic_cr_positions: tuple[tuple[int, float], ...]
    lic_cr_energies: tuple[float, ...]


def diagonalize(h: OperatorMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and eigenvectors of a Hermitian operator."""
    defect = h.hermiticity_defect()
    if defect > _HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.2e})")
    return eigh(h.entries)


def _zero_displacement_center(template: HqrModel) -> float:
    """Crossing position in the q_e -> 0 limit.

    For unequal curvatures the crossing stays finite as the displacement
    vanishes: q_c -> sqrt(2 omega_ge / (M (omega_g^2 - omega_e^2))).  With
    equal curvatures it runs off to infinity, so there is no usable center.
    """
    wg2 = template.omega_g**2
    we2 = template.omega_e**2
    if wg2 == we2:
        raise NoCrossingError(
            "equal surface curvatures push the crossing to infinity as the "
            "displacement vanishes; the zero-displacement sweep point is "
            "undefined in profile-tracking mode"
        )
    arg = 2.0 * template.omega_ge / (template.mass * (wg2 - we2))
    if arg < 0.0:
        raise NoCrossingError(
            "no real zero-displacement crossing for these curvatures"
        )
    return math.sqrt(arg)


def _swept_model(
    template: HqrModel, lam: float, couplings: SweepCouplings
) -> HqrModel:
    """Template re-displaced to Huang-Rhys factor `lam`.

    In `full` mode the Gaussian profiles keep their amplitude and width but
    get re-centered on the crossing of the new geometry (an explicit center
    for the zero-displacement point, where the general formula degenerates).
    """
    q_e = lam * math.sqrt(2.0 / (template.mass * template.omega_g))
    dc = template.dc_profile
    dip = template.dipole_profile
    if couplings == "constant_dipole_no_dc":
        dc = replace(dc, amplitude=0.0, center=0.0)
        dip = replace(dip, center=0.0)  # center unused on a constant dipole
    elif lam == 0.0:
        center = _zero_displacement_center(template)
        dc = replace(dc, center=center)
        dip = replace(dip, center=center)
    else:
        dc = replace(dc, center=None)
        dip = replace(dip, center=None)
    return replace(template, q_e=q_e, dc_profile=dc, dipole_profile=dip)


def lambda_sweep(
    template: HqrModel,
    lambda_grid: Sequence[float],
    cavity: CavitySpec,
    basis: BasisSpec,
    couplings: SweepCouplings = "full",
    *,
    window: tuple[float, float] | None = (1.0 * HARTREE_PER_EV, 1.8 * HARTREE_PER_EV),
    store_vectors: bool = False,
) -> EigenTable:
    """Spectrum against the Huang-Rhys factor.

    Every grid point gets its own model via `_swept_model` and a fresh
    diagonalization; `window` restricts the retained eigenvalues (pass None
    to keep the full spectrum).  Eigenvectors are stored on request, one
    column per retained eigenvalue, in the assembly's basis ordering.
    """
    if couplings not in ("full", "constant_dipole_no_dc"):
        raise ValueError(f"unknown coupling mode {couplings!r}")
    grid = np.asarray(list(lambda_grid), dtype=float)
    rows: list[np.ndarray] = []
    vecs: list[np.ndarray] = []
    for lam in grid:
        model = _swept_model(template, float(lam), couplings)
        h = assemble_hamiltonian(
            model, cavity, basis, constant_dipole=(couplings == "constant_dipole_no_dc")
        )
        if window is None:
            evals, evecs = eigh(h.entries)
        else:
            evals, evecs = eigh(h.entries, subset_by_value=window)
        rows.append(evals)
        if store_vectors:
            vecs.append(evecs)
    counts = np.array([r.size for r in rows])
    width = int(counts.max()) if counts.size else 0
    energies = np.full((grid.size, width), np.nan)
    for i, r in enumerate(rows):
        energies[i, : r.size] = r
    return EigenTable(
        parameter="lambda",
        values=grid,
        energies=energies,
        counts=counts,
        window=window,
        eigenvectors=tuple(vecs) if store_vectors else None,
        basis=basis,
    )


def rabi_splitting(table: EigenTable, pair_index: int) -> float:
    """Gap of the n-th polariton doublet at the zero-displacement point.

    The doublet is identified by eigenvector weight on the two uncoupled
    partners |0; e, n> and |1; g, n>, which keeps the extraction well
    defined even when uncoupled spectator states interleave the doublets.
    Requires a sweep recorded with store_vectors=True.
    """
    if table.eigenvectors is None or table.basis is None:
        raise ValueError(
            "ambiguous pairing: sweep was stored without eigenvectors, "
            "rerun lambda_sweep with store_vectors=True"
        )
    at_zero = np.flatnonzero(np.abs(table.values) < 1e-12)
    if at_zero.size == 0:
        raise ValueError("the sweep does not include the lambda=0 point")
    i = int(at_zero[0])
    basis = table.basis
    if not (0 <= pair_index < basis.n_vib):
        raise ValueError(f"pair index {pair_index} outside the vibrational basis")
    idx_e = basis.index(0, 1, pair_index)
    idx_g = basis.index(1, 0, pair_index)
    vecs = table.eigenvectors[i]
    weights = np.abs(vecs[idx_e, :]) ** 2 + np.abs(vecs[idx_g, :]) ** 2
    if weights.size < 2:
        raise ValueError("ambiguous pairing: fewer than two states retained")
    order = np.argsort(weights)[::-1]
    top = order[:2]
    if weights[top].sum() < 0.5:
        raise ValueError(
            "ambiguous pairing: the doublet partners carry less than half "
            f"of the |0;e,{pair_index}> / |1;g,{pair_index}> character"
        )
    energies = table.row(i)
    return float(abs(energies[top[0]] - energies[top[1]]))


def _crossing_energy_on(model: HqrModel, q: float, surface: str, n_c: int, omega_c: float) -> float:
    v = potential_g(model, q) if surface == "g" else potential_e(model, q)
    return float(v + n_c * omega_c)


def dressed_curves(
    model: HqrModel,
    cavity: CavitySpec,
    n_c_max: int,
    q_grid: Sequence[float],
) -> tuple[dict[tuple[int, str], np.ndarray], CrossingGeometry]:
    """Photon-dressed potential curves and their crossing geometry.

    Returns the curves V_s(q) + n_c omega_c for n_c = 0..n_c_max and both
    surfaces, plus the positions/energies of the electrostatic crossing and
    of the rotating / counter-rotating light-induced crossings for each
    photon pairing below n_c_max.  All crossings must fall inside q_grid.
    """
    if n_c_max < 1:
        raise ValueError("need at least one photon manifold")
    q = np.asarray(list(q_grid), dtype=float)
    curves: dict[tuple[int, str], np.ndarray] = {}
    for n_c in range(n_c_max + 1):
        curves[(n_c, "g")] = potential_g(model, q) + n_c * cavity.omega_c
        curves[(n_c, "e")] = potential_e(model, q) + n_c * cavity.omega_c

    q_dc = crossing_point(model)
    q_lic_r = dressed_crossing(model, -cavity.omega_c)
    q_lic_cr = dressed_crossing(model, +cavity.omega_c)

    lo, hi = float(q.min()), float(q.max())
    outside = [
        name
        for name, pos in (
            ("DC", q_dc),
            ("LIC_R", q_lic_r),
            ("LIC_CR", q_lic_cr),
        )
        if not (lo <= pos <= hi)
    ]
    if outside:
        raise ValueError(
            f"crossings outside the coordinate grid [{lo:g}, {hi:g}]: "
            + ", ".join(outside)
        )

    lic_r = tuple((n_c, q_lic_r) for n_c in range(n_c_max))
    lic_cr = tuple((n_c, q_lic_cr) for n_c in range(n_c_max))
    geometry = CrossingGeometry(
        dc_position=q_dc,
        dc_energy=_crossing_energy_on(model, q_dc, "g", 0, cavity.omega_c),
        lic_r_positions=lic_r,
        lic_r_energies=tuple(
            _crossing_energy_on(model, q_lic_r, "e", n_c, cavity.omega_c)
            for n_c, _ in lic_r
        ),
        lic_cr_positions=lic_cr,
        lic_cr_energies=tuple(
            _crossing_energy_on(model, q_lic_cr, "g", n_c, cavity.omega_c)
            for n_c, _ in lic_cr
        ),
    )
    return curves, geometry


def open_channel_count(
    model: HqrModel, cavity: CavitySpec, e0: float, n_c_max: int = 32
) -> int:
    """Number of dressed states whose curve minimum lies below `e0`.

    The lower-surface minimum sits at zero, the upper one at omega_ge; each
    photon adds omega_c.  Counts both surfaces over n_c = 0..n_c_max.
    """
    count = 0
    for n_c in range(n_c_max + 1):
        if n_c * cavity.omega_c < e0:
            count += 1
        if model.omega_ge + n_c * cavity.omega_c < e0:
            count += 1
    return count


def write_eigentable_csv(table: EigenTable, path) -> None:
    """Sweep value in the first column, energies in eV after it.

    Missing entries (window kept fewer states at that sweep point) are
    left empty.  Twelve significant digits, scientific notation.
    """
    width = table.energies.shape[1]
    with open(path, "w") as fh:
        header = [table.parameter] + [f"E{k}_eV" for k in range(width)]
        fh.write(",".join(header) + "\n")
        for i, value in enumerate(table.values):
            cells = [f"{value:.11e}"]
            for k in range(width):
                x = table.energies[i, k]
                cells.append("" if math.isnan(x) else f"{x / HARTREE_PER_EV:.11e}")
            fh.write(",".join(cells) + "\n")
