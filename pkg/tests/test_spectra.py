"""Sweep, doublet-extraction and dressed-curve tests.

Crossing positions are frozen from an independent hand evaluation of the
parabola-intersection formulas; doublet splittings check against the
resonant two-level closed form.
"""
import math

import numpy as np
import pytest

from cavmol.fock import BasisSpec, OperatorMatrix, assemble_hamiltonian
from cavmol.model import (
    CavitySpec,
    GaussianProfile,
    HqrModel,
    NoCrossingError,
    crossing_energy,
    mirror_model,
    potential_e,
    potential_g,
)
from cavmol.presets import CAH_REDUCED_MASS, cah_model, reference_cavity
from cavmol.spectra import (
    EigenTable,
    _swept_model,
    diagonalize,
    dressed_curves,
    lambda_sweep,
    open_channel_count,
    rabi_splitting,
    write_eigentable_csv,
)
from cavmol.units import HARTREE_PER_EV

EV = HARTREE_PER_EV

# frozen from the parabola-intersection evaluation (see model tests)
CAH_QC = 0.7419182152026252
CAH_LIC_R = 0.35392336429381144
CAH_LIC_CR = 1.0690357909119073


def _demo_template(omega_e=0.1 * EV, dc_amplitude=0.1413 * EV):
    return HqrModel(
        omega_g=0.2 * EV,
        omega_e=omega_e,
        omega_ge=1.0 * EV,
        mass=CAH_REDUCED_MASS,
        q_e=1.7,
        q_x=0.0,
        dc_profile=GaussianProfile(dc_amplitude, 0.21),
        dipole_profile=GaussianProfile(1.0, 0.95),
    )


def _demo_cavity(g_ev=0.05):
    return CavitySpec(omega_c=1.0 * EV, chi=g_ev * EV / math.sqrt(1.0 * EV / 2.0))


# ---------------------------------------------------------------- diagonalize


def test_diagonalize_diagonal_input():
    h = OperatorMatrix(3, np.diag([3.0, 1.0, 2.0]))
    evals, evecs = diagonalize(h)
    assert np.allclose(evals, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(evecs), np.eye(3)[:, [1, 2, 0]])


def test_diagonalize_resonant_two_level_block():
    g = 0.05
    evals, _ = diagonalize(OperatorMatrix(2, np.array([[0.0, g], [g, 0.0]])))
    assert np.allclose(evals, [-g, g], atol=1e-15)


def test_diagonalize_rejects_nonhermitian():
    with pytest.raises(ValueError):
        diagonalize(OperatorMatrix(2, np.array([[0.0, 1.0], [0.0, 0.0]])))


def test_diagonalize_residuals_small():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(40, 40))
    h = OperatorMatrix(40, (a + a.T) / 2)
    evals, evecs = diagonalize(h)
    residual = h.entries @ evecs - evecs * evals
    scale = np.linalg.norm(h.entries)
    assert np.linalg.norm(residual, axis=0).max() < 1e-9 * scale


# --------------------------------------------------------------- lambda sweep


def test_uncoupled_sweep_energies_independent_of_lambda():
    template = _demo_template(dc_amplitude=0.0)
    cavity = CavitySpec(omega_c=1.0 * EV, chi=0.0)
    basis = BasisSpec(n_vib=30, n_fock=3)
    table = lambda_sweep(template, [0.5, 2.0], cavity, basis, "full", window=None)
    expected = []
    for n_c in range(3):
        for n in range(30):
            expected.append(0.2 * EV * (n + 0.5) + n_c * 1.0 * EV)
            expected.append(1.0 * EV + 0.1 * EV * (n + 0.5) + n_c * 1.0 * EV)
    expected = np.sort(expected)
    assert np.abs(table.energies[0] - expected).max() < 1e-10
    assert np.abs(table.energies[1] - expected).max() < 1e-10


def test_full_mode_zero_lambda_joins_continuously():
    # the zero-displacement point uses the analytic limit of the crossing
    # position; the spectrum must join the lambda -> 0+ branch smoothly.
    template = _demo_template()
    basis = BasisSpec(n_vib=60, n_fock=5)
    table = lambda_sweep(
        template, [0.0, 1e-8], _demo_cavity(), basis, "full", window=None
    )
    assert np.abs(table.energies[0] - table.energies[1]).max() < 1e-8 * EV


def test_full_mode_zero_lambda_equal_curvature_has_no_crossing():
    template = _demo_template(omega_e=0.2 * EV)
    basis = BasisSpec(n_vib=20, n_fock=3)
    with pytest.raises(NoCrossingError):
        lambda_sweep(template, [0.0], _demo_cavity(), basis, "full")


def test_sweep_rejects_unknown_coupling_mode():
    with pytest.raises(ValueError):
        lambda_sweep(
            _demo_template(), [0.5], _demo_cavity(), BasisSpec(20, 3), "adiabatic"
        )


def test_window_filter_and_padding():
    template = _demo_template(dc_amplitude=0.0)
    cavity = CavitySpec(omega_c=1.0 * EV, chi=0.0)
    basis = BasisSpec(n_vib=30, n_fock=3)
    table = lambda_sweep(
        template,
        [0.5],
        cavity,
        basis,
        "full",
        window=(1.0 * EV, 1.8 * EV),
    )
    row = table.row(0)
    assert row.size == table.counts[0]
    assert row.min() >= 1.0 * EV and row.max() <= 1.8 * EV
    assert np.all(np.diff(row) >= 0)
    # in-window states: g ladder n=5..8, e ladder n=0..7, one-photon g n=0..3
    assert row.size == 16


def test_sweep_rows_obey_weyl_bound():
    # sorted eigenvalues of Hermitian matrices satisfy
    # max_k |E_k(A) - E_k(B)| <= ||A - B||_2, so every adjacent pair of sweep
    # rows must stay within the spectral norm of the Hamiltonian difference.
    template = _demo_template()
    basis = BasisSpec(n_vib=50, n_fock=4)
    cavity = _demo_cavity()
    grid = [2.0, 2.25, 2.5, 2.75, 3.0]
    table = lambda_sweep(template, grid, cavity, basis, "full", window=None)
    hams = [
        assemble_hamiltonian(_swept_model(template, lam, "full"), cavity, basis)
        for lam in grid
    ]
    for i in range(len(grid) - 1):
        gap = np.abs(table.energies[i + 1] - table.energies[i]).max()
        norm = np.linalg.norm(hams[i + 1].entries - hams[i].entries, 2)
        assert gap <= norm + 1e-12


# ------------------------------------------------------------ rabi splitting


def _resonant_template():
    # equal surface curvatures: the vibration factors out and every doublet
    # is an exactly resonant two-level block
    return _demo_template(omega_e=0.2 * EV, dc_amplitude=0.0)


def test_rabi_doublets_at_reference_truncation():
    basis = BasisSpec(n_vib=110, n_fock=11)
    table = lambda_sweep(
        _resonant_template(),
        [0.0],
        _demo_cavity(0.05),
        basis,
        "constant_dipole_no_dc",
        window=(1.0 * EV, 2.1 * EV),
        store_vectors=True,
    )
    for n in range(5):
        assert rabi_splitting(table, n) / EV == pytest.approx(0.100, abs=0.001)


def test_rabi_splitting_zero_coupling_degenerate():
    basis = BasisSpec(n_vib=8, n_fock=3)
    table = lambda_sweep(
        _resonant_template(),
        [0.0],
        CavitySpec(omega_c=1.0 * EV, chi=0.0),
        basis,
        "constant_dipole_no_dc",
        window=None,
        store_vectors=True,
    )
    assert rabi_splitting(table, 0) < 1e-12


def test_rabi_splitting_linear_in_coupling():
    # rotating-wave resonant doublets are exactly linear in g; build the
    # tables from direct diagonalization of the RWA assembly.
    model = HqrModel(
        omega_g=0.2 * EV,
        omega_e=0.2 * EV,
        omega_ge=1.0 * EV,
        mass=CAH_REDUCED_MASS,
        q_e=0.0,
        q_x=0.0,
        dc_profile=GaussianProfile(0.0, 1.0),
        dipole_profile=GaussianProfile(1.0, 1.0),
    )
    basis = BasisSpec(n_vib=4, n_fock=4)

    def table_for(g_ev):
        cavity = CavitySpec(omega_c=1.0 * EV, chi=g_ev * EV / math.sqrt(1.0 * EV / 2))
        h = assemble_hamiltonian(
            model, cavity, basis, include_counter_rotating=False, constant_dipole=True
        )
        evals, evecs = diagonalize(h)
        return EigenTable(
            parameter="lambda",
            values=np.array([0.0]),
            energies=evals[None, :],
            counts=np.array([evals.size]),
            eigenvectors=(evecs,),
            basis=basis,
        )

    s1 = rabi_splitting(table_for(0.05), 0)
    s2 = rabi_splitting(table_for(0.10), 0)
    assert abs(s2 / s1 - 2.0) < 1e-10


def test_rabi_splitting_requires_vectors():
    table = EigenTable(
        parameter="lambda",
        values=np.array([0.0]),
        energies=np.zeros((1, 4)),
        counts=np.array([4]),
    )
    with pytest.raises(ValueError, match="ambiguous"):
        rabi_splitting(table, 0)


def test_rabi_splitting_requires_zero_point():
    basis = BasisSpec(n_vib=16, n_fock=3)
    table = lambda_sweep(
        _resonant_template(),
        [0.5],
        _demo_cavity(),
        basis,
        "constant_dipole_no_dc",
        window=None,
        store_vectors=True,
    )
    with pytest.raises(ValueError, match="lambda=0"):
        rabi_splitting(table, 0)


# ----------------------------------------------------- photon ladder overlap


def test_photon_and_vibronic_ladders_coincide():
    # omega_c = 5 omega_g makes |1; g, n> exactly degenerate with
    # |0; g, n+5>: 1 + 0.2 (n + 1/2) = 0.2 (n + 5 + 1/2) in eV.
    for n in range(4):
        e_photon = 1.0 + 0.2 * (n + 0.5)
        e_vibronic = 0.2 * (n + 5 + 0.5)
        assert e_photon == pytest.approx(e_vibronic, abs=1e-15)
    template = _demo_template(dc_amplitude=0.0)
    cavity = CavitySpec(omega_c=1.0 * EV, chi=0.0)
    table = lambda_sweep(
        template, [1.0], cavity, BasisSpec(30, 3), "full", window=None
    )
    row = table.row(0)
    # the degenerate pairs appear as exactly repeated eigenvalues
    target = (1.0 + 0.2 * 0.5) * EV
    hits = row[np.abs(row - target) < 1e-12]
    assert hits.size == 2


# -------------------------------------------------------------- dressed curves


def test_dressed_curves_cah_geometry():
    model = cah_model()
    cavity = reference_cavity(0.16)
    q = np.linspace(-2.0, 4.0, 601)
    curves, geo = dressed_curves(model, cavity, 4, q)
    assert set(curves) == {(n_c, s) for n_c in range(5) for s in ("g", "e")}
    assert geo.dc_position == pytest.approx(CAH_QC, abs=1e-12)
    assert geo.lic_r_positions[0][1] == pytest.approx(CAH_LIC_R, abs=1e-12)
    assert geo.lic_cr_positions[0][1] == pytest.approx(CAH_LIC_CR, abs=1e-12)
    # rotating crossings left of the electrostatic one, counter-rotating right
    assert all(qr < geo.dc_position for _, qr in geo.lic_r_positions)
    assert all(qcr > geo.dc_position for _, qcr in geo.lic_cr_positions)
    assert geo.dc_energy == pytest.approx(crossing_energy(model), rel=1e-12)
    # crossing energies agree evaluated from either curve of the pair
    q_r = geo.lic_r_positions[0][1]
    assert potential_e(model, q_r) + 0 * cavity.omega_c == pytest.approx(
        potential_g(model, q_r) + 1 * cavity.omega_c, rel=1e-10
    )
    assert geo.lic_r_energies[0] == pytest.approx(potential_e(model, q_r), rel=1e-12)
    # curve arrays are the dressed parabolas
    assert curves[(0, "g")][300] == pytest.approx(potential_g(model, q[300]), rel=1e-12)
    assert curves[(2, "e")][100] == pytest.approx(
        potential_e(model, q[100]) + 2 * cavity.omega_c, rel=1e-12
    )


def test_dressed_crossings_collapse_to_dc_as_omega_c_vanishes():
    model = cah_model()
    q = np.linspace(-2.0, 4.0, 301)
    _, geo_small = dressed_curves(model, CavitySpec(omega_c=1e-6, chi=0.0), 1, q)
    _, geo_big = dressed_curves(model, reference_cavity(0.0), 1, q)
    dc = geo_small.dc_position
    small_spread = max(
        abs(geo_small.lic_r_positions[0][1] - dc),
        abs(geo_small.lic_cr_positions[0][1] - dc),
    )
    big_spread = abs(geo_big.lic_r_positions[0][1] - dc)
    assert small_spread < 1e-3
    assert small_spread < big_spread


def test_dressed_curves_reject_crossings_outside_grid():
    model = cah_model()
    with pytest.raises(ValueError, match="LIC_CR"):
        dressed_curves(model, reference_cavity(0.0), 2, np.linspace(-1.0, 0.9, 50))


def test_dressed_curve_ordering_flips_under_mirror():
    model = mirror_model(cah_model())
    q = np.linspace(-4.0, 2.0, 301)
    _, geo = dressed_curves(model, reference_cavity(0.0), 2, q)
    assert all(qr > geo.dc_position for _, qr in geo.lic_r_positions)
    assert all(qcr < geo.dc_position for _, qcr in geo.lic_cr_positions)


def test_open_channel_count_cah():
    # ten dressed states fit below the CaH-fit initial energy
    assert open_channel_count(cah_model(), reference_cavity(0.16), 3.1 * EV) == 10
    # only the bare lower surface below a tiny cutoff
    assert open_channel_count(cah_model(), reference_cavity(0.16), 0.005 * EV) == 1


# ----------------------------------------------------------------- CSV export


def test_write_eigentable_csv(tmp_path):
    table = EigenTable(
        parameter="lambda",
        values=np.array([0.0, 1.0]),
        energies=np.array([[1.0 * EV, 1.2 * EV], [1.1 * EV, np.nan]]),
        counts=np.array([2, 1]),
    )
    path = tmp_path / "sweep.csv"
    write_eigentable_csv(table, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,E0_eV,E1_eV"
    first = lines[1].split(",")
    assert first[0] == "0.00000000000e+00"
    assert float(first[1]) == pytest.approx(1.0, rel=1e-11)
    assert lines[2].split(",")[2] == ""
