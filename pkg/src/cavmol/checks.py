"""Built-in invariant suite behind the --seed-check flag.

Each check is a standalone function returning a CheckResult, so the test
suite can call them individually; seed_check() runs the lot and prints one
line per check.  These are the always-true properties of the implementation
(hermiticity, conservation laws, representation equivalence, operator
identities, byte determinism), not physics results.
"""
from __future__ import annotations

import filecmp
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh, expm

from .config import RunSpec
from .dynamics import franck_condon_state, lab_frame_state, propagate
from .fock import (
    BasisSpec,
    assemble_hamiltonian,
    assemble_transformed_hamiltonian,
    displacement_matrix,
    ladder,
    squeeze_matrix,
)
from .presets import cah_model, demo_model, reference_basis, reference_cavity
from .spectra import _swept_model

__all__ = ["CheckResult", "seed_check"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_hermiticity() -> CheckResult:
    """Every assembly route yields a symmetric matrix to 1e-12."""
    # n_vib = 80 clears the displacement guard for the demo geometry
    basis = BasisSpec(n_vib=80, n_fock=5)
    cavity = reference_cavity(0.16)
    demo = demo_model()
    cah = cah_model()
    family = [
        assemble_hamiltonian(demo, cavity, basis),
        assemble_hamiltonian(demo, cavity, basis, include_counter_rotating=False),
        assemble_hamiltonian(demo, cavity, basis, constant_dipole=True),
        assemble_hamiltonian(cah, cavity, basis),
        assemble_transformed_hamiltonian(cah, cavity, basis),
        assemble_transformed_hamiltonian(
            _swept_model(cah, -3.0, "full"), cavity, basis
        ),
    ]
    worst = max(h.hermiticity_defect() for h in family)
    return CheckResult(
        "hermiticity", worst < 1e-12, f"max defect {worst:.2e} over {len(family)} assemblies"
    )


def check_displacement_squeeze() -> CheckResult:
    """Closed-form matrix elements against brute-force exponentials."""
    n = 80
    lower, raise_ = ladder(n)
    worst = 0.0
    for lam in (0.8, 1.3, 2.0):
        d = displacement_matrix(lam, n)
        brute = expm(lam * (raise_ - lower))
        worst = max(worst, float(np.abs(d - brute).max()))
        worst = max(worst, abs(d[0, 0] - math.exp(-0.5 * lam * lam)))
        poisson = np.exp(-lam * lam) * lam ** (2 * np.arange(n)) / [
            math.factorial(k) for k in np.arange(n)
        ]
        worst = max(worst, float(np.abs(d[:, 0] ** 2 - poisson).max()))
    for r in (0.35, -0.5):
        s = squeeze_matrix(r, n)
        brute = expm(0.5 * r * (lower @ lower - raise_ @ raise_))
        worst = max(worst, float(np.abs(s - brute).max()))
        worst = max(worst, abs(s[0, 0] - math.cosh(r) ** -0.5))
    return CheckResult("displacement/squeeze", worst < 1e-8, f"max gap {worst:.2e}")


def check_rwa_number() -> CheckResult:
    """Without counter-rotating terms and DC, P_e + <n> is a constant."""
    model = demo_model(dc_amplitude=0.0)
    cavity = reference_cavity(0.16)
    basis = BasisSpec(n_vib=60, n_fock=6)
    h = assemble_hamiltonian(model, cavity, basis, include_counter_rotating=False)
    psi0 = lab_frame_state(franck_condon_state(model, basis), model)
    series = propagate(h, psi0, np.arange(0.0, 35.01, 0.1))
    drift = float(
        np.ptp(series.channels["P_e"] + series.channels["mean_photons"])
    )
    return CheckResult("rwa excitation number", drift < 1e-9, f"drift {drift:.2e} over 35 fs")


def check_isospectrality() -> CheckResult:
    """Lab-frame and surface-adapted assemblies share their low spectrum."""
    model = cah_model()
    cavity = reference_cavity(0.16)
    gaps = []
    for n_vib in (80, 110, 160):
        basis = BasisSpec(n_vib=n_vib, n_fock=11)
        lab = eigvalsh(assemble_hamiltonian(model, cavity, basis).entries)[:20]
        adapted = eigvalsh(
            assemble_transformed_hamiltonian(model, cavity, basis).entries
        )[:20]
        gaps.append(float(np.abs(lab - adapted).max()))
    detail = "gaps " + " -> ".join(f"{g:.2e}" for g in gaps) + " hartree"
    return CheckResult("isospectrality", gaps[-1] < 1e-6, detail)


def check_conservation() -> CheckResult:
    """Norm and energy stay put over 35 fs on both backends."""
    model = cah_model()
    cavity = reference_cavity(0.16)
    series = propagate(
        assemble_transformed_hamiltonian(model, cavity, reference_basis()),
        franck_condon_state(model, reference_basis()),
        np.arange(0.0, 35.01, 0.1),
    )
    norm_s = float(np.abs(series.channels["norm"] - 1.0).max())
    energy_s = float(np.ptp(series.channels["energy"]))

    from .grid import GridSpec, franck_condon_grid_state, grid_propagate, map_model_to_grid

    grid = GridSpec()
    result = grid_propagate(
        franck_condon_grid_state(model, grid),
        map_model_to_grid(model, grid),
        cavity,
        grid,
        35.0,
    )
    norm_g = float(np.abs(result.series.channels["norm"] - 1.0).max())
    energy_g = float(np.ptp(result.series.channels["energy"]))
    ok = norm_s < 1e-9 and energy_s < 1e-9 and norm_g < 1e-8 and energy_g < 1e-6
    return CheckResult(
        "norm/energy conservation",
        ok,
        f"spectral norm {norm_s:.1e} energy {energy_s:.1e}; "
        f"grid norm {norm_g:.1e} energy {energy_g:.1e}",
    )


def _determinism_spec(out_dir: str) -> RunSpec:
    # n_vib must hold the demo photostart displacement or every point
    # fails identically and the byte comparison passes without testing
    # anything.
    return RunSpec(
        mode="sweep",
        cavity=reference_cavity(0.0),
        basis=BasisSpec(n_vib=64, n_fock=3),
        model=demo_model(),
        t_final_fs=2.0,
        sample_dt_fs=0.5,
        sweep_axes=(("chi", (0.0, 0.05, 0.1)),),
        output_dir=out_dir,
    )


def check_determinism() -> CheckResult:
    """Worker count must not leak into the bytes of any CSV."""
    from .runner import run

    with tempfile.TemporaryDirectory() as tmp:
        dir_one = os.path.join(tmp, "one")
        dir_two = os.path.join(tmp, "two")
        code_one = run(_determinism_spec(dir_one), workers=1, plot=False)
        code_two = run(_determinism_spec(dir_two), workers=2, plot=False)
        if code_one != 0 or code_two != 0:
            return CheckResult(
                "determinism", False, f"sweep runs exited {code_one}/{code_two}"
            )
        names = sorted(n for n in os.listdir(dir_one) if n.endswith(".csv"))
        names_two = sorted(n for n in os.listdir(dir_two) if n.endswith(".csv"))
        if names != names_two or not names:
            return CheckResult("determinism", False, "output file sets differ")
        mismatched = [
            n
            for n in names
            if not filecmp.cmp(
                os.path.join(dir_one, n), os.path.join(dir_two, n), shallow=False
            )
        ]
    if mismatched:
        return CheckResult("determinism", False, f"bytes differ: {', '.join(mismatched)}")
    return CheckResult(
        "determinism", True, f"{len(names)} CSVs byte-identical at 1 vs 2 workers"
    )


_CHECKS = (
    check_hermiticity,
    check_displacement_squeeze,
    check_rwa_number,
    check_isospectrality,
    check_conservation,
    check_determinism,
)


def seed_check(echo=print) -> bool:
    """Run the whole suite; one line per check, True when everything holds."""
    all_ok = True
    for check in _CHECKS:
        result = check()
        all_ok &= result.passed
        echo(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    return all_ok
