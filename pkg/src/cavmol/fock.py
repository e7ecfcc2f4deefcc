"""Truncated Fock-space operators and Hamiltonian assembly.

The composite basis is |n_c; s, n> with photon number n_c, electronic
surface s (0 = lower, 1 = upper) and vibrational quantum n.  The flat
index contract is

    index = (n_c * 2 + s) * n_vib + n

so the vibrational index runs fastest and the photon index slowest; every
matrix in this package is laid out against that ordering.

Two assembly routes are provided.  `assemble_hamiltonian` writes the
Hamiltonian in the lab frame, where both surfaces share the ground-surface
oscillator basis and the upper surface enters through the displaced and
squeezed number operator.  `assemble_transformed_hamiltonian` writes the
unitarily equivalent surface-adapted form, where each surface carries its
own oscillator eigenbasis and the displacement/squeeze operators move into
the coupling terms.  The two matrices are isospectral up to truncation
error, which is the strongest cross-check the module offers (see the test
suite).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .model import (
    CavitySpec,
    GaussianProfile,
    HqrModel,
    resolved_dc_profile,
    resolved_dipole_profile,
)

__all__ = [
    "BasisSpec",
    "OperatorMatrix",
    "TruncationError",
    "ladder",
    "number_operator",
    "displacement_matrix",
    "squeeze_matrix",
    "shifted_number_operator",
    "position_operator",
    "profile_operator",
    "assemble_hamiltonian",
    "assemble_transformed_hamiltonian",
    "surface_to_lab_matrix",
    "lab_position_operator",
    "excitation_number_operator",
    "dump_operator",
    "load_operator",
]

# Acceptable population of the highest retained vibrational state when a
# displacement or squeeze of the vacuum is represented in the truncation.
_LEAKAGE_TOL = 1e-12


class TruncationError(RuntimeError):
    """Basis too small for the requested operator; carries a suggestion."""

    def __init__(self, message: str, suggested_size: int):
        super().__init__(message)
        self.suggested_size = suggested_size


@dataclass(frozen=True)
class BasisSpec:
    """Truncation sizes for the composite photon x electronic x vibration basis."""

    n_vib: int
    n_fock: int

    def __post_init__(self) -> None:
        if self.n_vib < 2 or self.n_fock < 2:
            raise ValueError("need at least two states per register")

    @property
    def dim(self) -> int:
        return 2 * self.n_vib * self.n_fock

    def index(self, n_c: int, s: int, n: int) -> int:
        """Flat index of |n_c; s, n>; s=0 lower surface, s=1 upper."""
        if not (0 <= n_c < self.n_fock and s in (0, 1) and 0 <= n < self.n_vib):
            raise IndexError(f"state ({n_c}, {s}, {n}) outside basis {self}")
        return (n_c * 2 + s) * self.n_vib + n


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator with its dimension and a human-readable label."""

    dim: int
    entries: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        if self.entries.shape != (self.dim, self.dim):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match dim {self.dim}"
            )

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())


def ladder(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowering and raising matrices in an n-state number basis."""
    lower = np.zeros((n, n))
    idx = np.arange(1, n)
    lower[idx - 1, idx] = np.sqrt(idx)
    return lower, lower.T.copy()


def number_operator(n: int) -> np.ndarray:
    return np.diag(np.arange(n, dtype=float))


def _exp_antisymmetric(gen: np.ndarray) -> np.ndarray:
    """Exponential of a real antisymmetric generator via Hermitian eigenbasis.

    exp(K) = V exp(-i theta) V^dagger with (theta, V) = eigh(iK); the result
    is orthogonal to round-off, which keeps conjugated operators exactly
    isospectral at any truncation.
    """
    theta, vecs = np.linalg.eigh(1j * gen)
    out = (vecs * np.exp(-1j * theta)) @ vecs.conj().T
    return out.real


def _displacement_leakage(lam: float, n: int) -> float:
    """Population of |n-1> in D(lam)|0>: Poisson weight exp(-l^2) l^(2k)/k!."""
    if lam == 0.0:
        return 0.0
    k = n - 1
    logp = -lam * lam + 2.0 * k * math.log(abs(lam)) - math.lgamma(k + 1.0)
    return math.exp(logp)


def _squeeze_leakage(r: float, n: int) -> float:
    """Population of the top retained even state in S(r)|0>."""
    if r == 0.0:
        return 0.0
    m = (n - 1) // 2  # top even index is 2m
    if m == 0:
        return 1.0
    logp = (
        math.lgamma(2 * m + 1.0)
        - 2.0 * m * math.log(2.0)
        - 2.0 * math.lgamma(m + 1.0)
        + 2.0 * m * math.log(abs(math.tanh(r)))
        - math.log(math.cosh(r))
    )
    return math.exp(logp)


def _suggest_size(leak, arg: float, n: int) -> int:
    m = n
    while leak(arg, m) >= _LEAKAGE_TOL:
        m = int(m * 1.3) + 2
        if m > 100_000:  # pragma: no cover - defensive
            raise RuntimeError("no practical truncation satisfies the leakage bound")
    return m


def displacement_matrix(lam: float, n: int) -> np.ndarray:
    """exp(lam (b^dag - b)) in an n-state basis.

    Refuses truncations where the displaced vacuum still puts more than
    1e-12 of population on the top retained state, suggesting a size that
    does satisfy the bound.
    """
    leak = _displacement_leakage(lam, n)
    if leak >= _LEAKAGE_TOL:
        suggestion = _suggest_size(_displacement_leakage, lam, n)
        raise TruncationError(
            f"displacement lambda={lam:.4g} leaks {leak:.2e} at n={n}; "
            f"use n >= {suggestion}",
            suggestion,
        )
    low, high = ladder(n)
    return _exp_antisymmetric(lam * (high - low))


def squeeze_matrix(r: float, n: int) -> np.ndarray:
    """exp(r (b^2 - b^dag^2) / 2) in an n-state basis."""
    leak = _squeeze_leakage(r, n)
    if leak >= _LEAKAGE_TOL:
        suggestion = _suggest_size(_squeeze_leakage, r, n)
        raise TruncationError(
            f"squeeze r={r:.4g} leaks {leak:.2e} at n={n}; use n >= {suggestion}",
            suggestion,
        )
    low, high = ladder(n)
    return _exp_antisymmetric(0.5 * r * (low @ low - high @ high))


def shifted_number_operator(lam: float, r: float, n: int) -> np.ndarray:
    """Number operator of the displaced, squeezed oscillator.

    D(lam) S(r) N S(r)^dag D(lam)^dag expressed in the reference oscillator
    basis; its spectrum is exactly {0, 1, ..., n-1} because the conjugating
    factors are orthogonal matrices.
    """
    d = displacement_matrix(lam, n)
    s = squeeze_matrix(r, n)
    u = d @ s
    return u @ number_operator(n) @ u.T


def position_operator(n: int, mass: float, omega: float) -> np.ndarray:
    """q = sqrt(1 / (2 M omega)) (b + b^dag)."""
    low, high = ladder(n)
    return math.sqrt(1.0 / (2.0 * mass * omega)) * (low + high)


def profile_operator(
    profile: GaussianProfile, n: int, mass: float, omega: float
) -> np.ndarray:
    """Gaussian envelope of the position operator, f(q_hat).

    Built by spectral calculus: diagonalize q_hat and apply the profile to
    its eigenvalues.  For the (0,0) element this is identical to n-point
    Gauss-Hermite quadrature of |phi_0|^2 f, which the tests exploit.
    """
    if profile.amplitude == 0.0:
        return np.zeros((n, n))
    x, w = np.linalg.eigh(position_operator(n, mass, omega))
    return (w * profile(x)) @ w.T


def _compose(photon: np.ndarray, elec: np.ndarray, vib: np.ndarray) -> np.ndarray:
    """Tensor product in the (photon, electronic, vibration) index order."""
    return np.kron(photon, np.kron(elec, vib))


_PG = np.array([[1.0, 0.0], [0.0, 0.0]])
_PE = np.array([[0.0, 0.0], [0.0, 1.0]])
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SP = np.array([[0.0, 0.0], [1.0, 0.0]])  # |e><g|
_SM = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e|


def _coupling_envelope(
    model: HqrModel, cavity: CavitySpec, n_vib: int, constant_dipole: bool
) -> np.ndarray:
    """chi sqrt(omega_c/2) d(q_hat), the position-dependent coupling operator."""
    prefactor = cavity.chi * math.sqrt(cavity.omega_c / 2.0)
    if constant_dipole:
        return prefactor * model.dipole_profile.amplitude * np.eye(n_vib)
    dip = resolved_dipole_profile(model)
    return prefactor * profile_operator(dip, n_vib, model.mass, model.omega_g)


def assemble_hamiltonian(
    model: HqrModel,
    cavity: CavitySpec,
    basis: BasisSpec,
    *,
    include_counter_rotating: bool = True,
    constant_dipole: bool = False,
    diagonal_dipole_profiles: tuple[GaussianProfile, GaussianProfile] | None = None,
) -> OperatorMatrix:
    """Full Hamiltonian in the lab frame (shared oscillator basis).

    Molecular part: lower-surface harmonic ladder, upper surface through the
    displaced/squeezed number operator, Gaussian diabatic coupling in the
    position operator.  Cavity part: omega_c * photon number (zero-point
    dropped).  Interaction: chi sqrt(omega_c/2) d(q_hat) (s+ + s-) (a + a^dag),
    optionally without the counter-rotating half, optionally with a constant
    dipole (d == peak value everywhere), optionally augmented by diagonal
    (permanent) dipole profiles for each surface.
    """
    nv, nf = basis.n_vib, basis.n_fock
    iv = np.eye(nv)
    iph = np.eye(nf)

    nvib = number_operator(nv)
    ne = shifted_number_operator(model.displacement, model.squeeze, nv)

    h = _compose(iph, _PG, model.omega_g * (nvib + 0.5 * iv))
    h += _compose(iph, _PE, model.omega_ge * iv + model.omega_e * (ne + 0.5 * iv))

    dc = resolved_dc_profile(model)
    if dc.amplitude != 0.0:
        vd = profile_operator(dc, nv, model.mass, model.omega_g)
        h += _compose(iph, _SX, vd)

    h += cavity.omega_c * _compose(number_operator(nf), np.eye(2), iv)

    if cavity.chi != 0.0:
        w = _coupling_envelope(model, cavity, nv, constant_dipole)
        a, ad = ladder(nf)
        if include_counter_rotating:
            h += _compose(a + ad, _SX, w)
        else:
            h += _compose(a, _SP, w) + _compose(ad, _SM, w)
        if diagonal_dipole_profiles is not None:
            pref = cavity.chi * math.sqrt(cavity.omega_c / 2.0)
            d_gg, d_ee = diagonal_dipole_profiles
            w_gg = pref * profile_operator(d_gg, nv, model.mass, model.omega_g)
            w_ee = pref * profile_operator(d_ee, nv, model.mass, model.omega_g)
            h += _compose(a + ad, _PG, w_gg) + _compose(a + ad, _PE, w_ee)

    label = (
        f"H(lambda={model.displacement:.4f}, r={model.squeeze:.4f}, "
        f"chi={cavity.chi:g}{', rwa' if not include_counter_rotating else ''})"
    )
    return OperatorMatrix(basis.dim, h, label)


def assemble_transformed_hamiltonian(
    model: HqrModel, cavity: CavitySpec, basis: BasisSpec
) -> OperatorMatrix:
    """Surface-adapted form of the same Hamiltonian.

    Each electronic surface keeps its own harmonic ladder on the diagonal,
    and the couplings acquire the displacement/squeeze factors:  the raising
    part of every surface-changing term is S^dag D^dag f(q_hat) and the
    lowering part is its transpose, which keeps the matrix symmetric and the
    spectrum equal to the lab-frame assembly up to truncation error.
    """
    nv, nf = basis.n_vib, basis.n_fock
    iv = np.eye(nv)
    iph = np.eye(nf)

    nvib = number_operator(nv)
    undress = None  # S^dag D^dag, built only if a coupling needs it

    def _undress() -> np.ndarray:
        nonlocal undress
        if undress is None:
            d = displacement_matrix(model.displacement, nv)
            s = squeeze_matrix(model.squeeze, nv)
            undress = s.T @ d.T
        return undress

    h = _compose(iph, _PG, model.omega_g * (nvib + 0.5 * iv))
    h += _compose(iph, _PE, model.omega_ge * iv + model.omega_e * (nvib + 0.5 * iv))
    h += cavity.omega_c * _compose(number_operator(nf), np.eye(2), iv)

    dc = resolved_dc_profile(model)
    if dc.amplitude != 0.0:
        vd = profile_operator(dc, nv, model.mass, model.omega_g)
        up = _undress() @ vd
        h += _compose(iph, _SP, up) + _compose(iph, _SM, up.T)

    if cavity.chi != 0.0:
        w = _coupling_envelope(model, cavity, nv, constant_dipole=False)
        up = _undress() @ w
        a, ad = ladder(nf)
        h += _compose(a + ad, _SP, up) + _compose(a + ad, _SM, up.T)

    label = (
        f"H_adapted(lambda={model.displacement:.4f}, r={model.squeeze:.4f}, "
        f"chi={cavity.chi:g})"
    )
    return OperatorMatrix(basis.dim, h, label)


def surface_to_lab_matrix(model: HqrModel, basis: BasisSpec) -> np.ndarray:
    """Map surface-adapted amplitudes to lab-frame amplitudes.

    Identity on the lower surface, D(lambda) S(r) on the upper one (the
    upper-surface index n labels displaced/squeezed eigenstates in the
    adapted representation and bare oscillator states in the lab frame).
    """
    d = displacement_matrix(model.displacement, basis.n_vib)
    s = squeeze_matrix(model.squeeze, basis.n_vib)
    return _compose(np.eye(basis.n_fock), _PG, np.eye(basis.n_vib)) + _compose(
        np.eye(basis.n_fock), _PE, d @ s
    )


def lab_position_operator(
    model: HqrModel, basis: BasisSpec, representation: str = "lab"
) -> np.ndarray:
    """Nuclear coordinate operator in the requested representation."""
    q = position_operator(basis.n_vib, model.mass, model.omega_g)
    iph = np.eye(basis.n_fock)
    if representation == "lab":
        return _compose(iph, np.eye(2), q)
    if representation == "surface":
        d = displacement_matrix(model.displacement, basis.n_vib)
        s = squeeze_matrix(model.squeeze, basis.n_vib)
        u = d @ s
        return _compose(iph, _PG, q) + _compose(iph, _PE, u.T @ q @ u)
    raise ValueError(f"unknown representation {representation!r}")


def excitation_number_operator(basis: BasisSpec) -> np.ndarray:
    """Photon number plus upper-surface population, a^dag a + s+ s-."""
    iv = np.eye(basis.n_vib)
    return _compose(number_operator(basis.n_fock), np.eye(2), iv) + _compose(
        np.eye(basis.n_fock), _PE, iv
    )


_DUMP_MAGIC = b"CAVMOLOP"


def dump_operator(op: OperatorMatrix, path, binary: bool = False) -> None:
    """Write an operator to disk for external inspection.

    Text format: comment header (dimension, label, index contract), then one
    "re im" pair per line in row-major order.  Binary format: magic, dim and
    label length as little-endian uint64, label bytes, complex128 entries.
    """
    mat = np.ascontiguousarray(op.entries, dtype=complex)
    if binary:
        with open(path, "wb") as fh:
            label = op.label.encode()
            fh.write(_DUMP_MAGIC)
            fh.write(struct.pack("<QQ", op.dim, len(label)))
            fh.write(label)
            fh.write(mat.tobytes())
        return
    with open(path, "w") as fh:
        fh.write("# cavmol operator dump\n")
        fh.write(f"# dim={op.dim}\n")
        fh.write(f"# label={op.label}\n")
        fh.write("# ordering=flat index (n_c*2+s)*n_vib+n, row-major, re im pairs\n")
        for row in mat:
            for z in row:
                fh.write(f"{z.real:.17e} {z.imag:.17e}\n")


def load_operator(path) -> OperatorMatrix:
    """Read back a dump written by `dump_operator` (either format)."""
    with open(path, "rb") as fh:
        head = fh.read(len(_DUMP_MAGIC))
        if head == _DUMP_MAGIC:
            dim, label_len = struct.unpack("<QQ", fh.read(16))
            label = fh.read(label_len).decode()
            data = np.frombuffer(fh.read(), dtype=complex).reshape(dim, dim)
            return OperatorMatrix(dim, data.copy(), label)
    dim = None
    label = ""
    values: list[complex] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                if line.startswith("# dim="):
                    dim = int(line.split("=", 1)[1])
                elif line.startswith("# label="):
                    label = line.split("=", 1)[1]
                continue
            if line:
                re_part, im_part = line.split()
                values.append(complex(float(re_part), float(im_part)))
    if dim is None or len(values) != dim * dim:
        raise ValueError(f"malformed operator dump {path}")
    return OperatorMatrix(dim, np.array(values).reshape(dim, dim), label)
