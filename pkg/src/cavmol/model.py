"""Model definitions for a two-surface diatomic coupled to one cavity mode.

The molecule is described by two harmonic diabatic potentials sharing a
single nuclear coordinate q (reduced mass M):

    V_g(q) = (1/2) M omega_g^2 q^2
    V_e(q) = omega_ge + (1/2) M omega_e^2 (q - q_e)^2

plus a Gaussian diabatic coupling between the surfaces and a Gaussian
transition-dipole profile that mediates the coupling to the cavity mode.
All fields are in atomic units (see `cavmol.units`).

The vibronic structure is captured by two derived dimensionless numbers:
the displacement parameter lambda = q_e * sqrt(M omega_g / 2) and the
frequency-change parameter r = log(sqrt(omega_e / omega_g)).  Both are
computed on demand and never stored, so they cannot drift out of sync with
the primary fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "GaussianProfile",
    "HqrModel",
    "CavitySpec",
    "NoCrossingError",
    "huang_rhys",
    "squeeze_factor",
    "potential_g",
    "potential_e",
    "crossing_point",
    "crossing_energy",
    "dressed_crossing",
    "mirror_model",
    "resolved_dc_profile",
    "resolved_dipole_profile",
]

# Residual tolerance of the internal V_g(q_c) == V_e(q_c) consistency check
# (hartree).  Exceeding it means the closed-form branch selection is wrong.
_CROSSING_RESIDUAL_TOL = 1e-10

# |r| below this uses the equal-frequency closed form for the crossing.
_R_EQUAL_FREQ_TOL = 1e-10


class NoCrossingError(ValueError):
    """The two diabatic curves (or their dressed copies) do not intersect."""


@dataclass(frozen=True)
class GaussianProfile:
    """Gaussian envelope amplitude * exp(-(q - center)^2 / (2 width^2)).

    `center=None` marks a profile that rides the diabatic crossing point of
    whatever model it is attached to; it is resolved via
    `resolved_dc_profile` / `resolved_dipole_profile` before evaluation.
    """

    amplitude: float
    width: float
    center: float | None = None

    def __post_init__(self) -> None:
        if not (self.width > 0.0) or not math.isfinite(self.width):
            raise ValueError(f"profile width must be positive, got {self.width}")
        if not math.isfinite(self.amplitude):
            raise ValueError("profile amplitude must be finite")

    def __call__(self, q):
        if self.center is None:
            raise ValueError("profile center unresolved; resolve against a model first")
        import numpy as np

        return self.amplitude * np.exp(-((q - self.center) ** 2) / (2.0 * self.width**2))


@dataclass(frozen=True)
class HqrModel:
    """Two harmonic diabats, Gaussian diabatic coupling, Gaussian dipole.

    Parameters are atomic units throughout.  `q_x` and `omega_x` describe
    the third surface from which vertical photoexcitation starts (only its
    ground vibrational state enters); `omega_x=None` falls back to
    `omega_g`, which is adequate whenever the lower surfaces have similar
    curvature.
    """

    omega_g: float
    omega_e: float
    omega_ge: float
    mass: float
    q_e: float
    q_x: float = 0.0
    omega_x: float | None = None
    dc_profile: GaussianProfile = GaussianProfile(0.0, 1.0)
    dipole_profile: GaussianProfile = GaussianProfile(1.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("omega_g", "omega_e", "mass"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")
        if self.omega_ge < 0.0:
            raise ValueError("omega_ge must be non-negative")
        if self.omega_x is not None and not (self.omega_x > 0.0):
            raise ValueError("omega_x must be positive when given")

    @property
    def omega_x_effective(self) -> float:
        return self.omega_g if self.omega_x is None else self.omega_x

    @property
    def displacement(self) -> float:
        """Dimensionless displacement of the e-surface minimum."""
        return huang_rhys(self.q_e, self.mass, self.omega_g)

    @property
    def squeeze(self) -> float:
        """Dimensionless frequency-change parameter between the surfaces."""
        return squeeze_factor(self.omega_g, self.omega_e)


@dataclass(frozen=True)
class CavitySpec:
    """Single cavity mode: frequency omega_c and dimensionless strength chi.

    The light-matter coupling constant is derived, never stored:
    g = chi * d0 * sqrt(omega_c / 2) with d0 the dipole profile peak.
    """

    omega_c: float
    chi: float

    def __post_init__(self) -> None:
        if not (self.omega_c > 0.0):
            raise ValueError("omega_c must be positive")
        if self.chi < 0.0:
            raise ValueError("chi must be non-negative")

    def coupling_strength(self, dipole_peak: float) -> float:
        return self.chi * dipole_peak * math.sqrt(self.omega_c / 2.0)


def huang_rhys(q_e: float, mass: float, omega_g: float) -> float:
    """Displacement parameter lambda = q_e sqrt(M omega_g / 2).

    Odd in q_e; lambda^2 is the mean vibrational quantum number excited by
    an instantaneous shift of a ground-frequency oscillator by q_e.
    """
    return q_e * math.sqrt(mass * omega_g / 2.0)


def squeeze_factor(omega_g: float, omega_e: float) -> float:
    """Frequency-change parameter r = log(sqrt(omega_e / omega_g)).

    Zero iff the two surfaces share one frequency; swapping the arguments
    flips the sign.
    """
    if not (omega_g > 0.0 and omega_e > 0.0):
        raise ValueError("frequencies must be positive")
    return 0.5 * math.log(omega_e / omega_g)


def potential_g(model: HqrModel, q):
    """Lower diabatic curve, minimum pinned at q=0, V=0."""
    return 0.5 * model.mass * model.omega_g**2 * q * q


def potential_e(model: HqrModel, q):
    """Upper diabatic curve, minimum omega_ge at q=q_e."""
    d = q - model.q_e
    return model.omega_ge + 0.5 * model.mass * model.omega_e**2 * d * d


def _parabola_crossing(
    mass: float, omega_g: float, omega_e: float, q_e: float, gap: float
) -> float:
    """Intersection of (1/2)M w_g^2 q^2 with gap + (1/2)M w_e^2 (q-q_e)^2.

    `gap` is the vertical offset of the displaced parabola; the physical
    branch is the one between the two minima for a plain diabatic crossing
    and continues analytically for dressed (photon-shifted) copies.
    """
    if q_e == 0.0:
        raise NoCrossingError("q_e = 0: displaced curve has no transverse crossing")
    r = squeeze_factor(omega_g, omega_e)
    if abs(r) < _R_EQUAL_FREQ_TOL:
        # Equal curvature: single linear crossing.
        return q_e / 2.0 + gap / (mass * q_e * omega_g**2)
    e4 = math.exp(-4.0 * r)  # (omega_g / omega_e)^2
    disc = e4 + 2.0 * gap * (e4 - 1.0) / (mass * omega_e**2 * q_e**2)
    if disc < 0.0:
        raise NoCrossingError(
            f"no real crossing: discriminant {disc:.3e} < 0 for gap {gap:.6e} hartree"
        )
    return q_e / (1.0 - e4) * (1.0 - math.sqrt(disc))


def crossing_point(model: HqrModel) -> float:
    """Position q_c where the two diabatic curves intersect.

    Uses the closed form appropriate to r (equal or unequal curvature) and
    verifies |V_g(q_c) - V_e(q_c)| < 1e-10 hartree before returning.
    """
    q_c = _parabola_crossing(
        model.mass, model.omega_g, model.omega_e, model.q_e, model.omega_ge
    )
    residual = abs(potential_g(model, q_c) - potential_e(model, q_c))
    if residual > _CROSSING_RESIDUAL_TOL:
        raise NoCrossingError(
            f"crossing residual {residual:.3e} hartree exceeds tolerance; "
            "branch selection failed for these parameters"
        )
    return q_c


def crossing_energy(model: HqrModel) -> float:
    """Common curve energy at the diabatic crossing, V_c = V_g(q_c)."""
    return potential_g(model, crossing_point(model))


def dressed_crossing(model: HqrModel, energy_shift: float) -> float:
    """Crossing of V_e(q) + energy_shift with V_g(q).

    energy_shift = -omega_c gives the light-induced crossing where the
    upper curve meets the one-photon copy of the lower curve; +omega_c
    gives the counter-rotating counterpart on the far side of q_c.
    """
    return _parabola_crossing(
        model.mass,
        model.omega_g,
        model.omega_e,
        model.q_e,
        model.omega_ge + energy_shift,
    )


def mirror_model(model: HqrModel) -> HqrModel:
    """Reflected model: q_e -> -q_e with the photostart geometry preserved.

    The start position keeps its distance to the displaced minimum and
    stays on the left (classical left turning point convention), and the
    coupling profile centers follow the reflected crossing point.  Applying
    the mirror twice returns the original model; the symmetric q_e = 0 case
    maps to itself.
    """
    if model.q_e == 0.0:
        return model

    def flip(p: GaussianProfile) -> GaussianProfile:
        if p.center is None:
            return p
        return replace(p, center=-p.center)

    separation = abs(model.q_e - model.q_x)
    new_q_e = -model.q_e
    return replace(
        model,
        q_e=new_q_e,
        q_x=new_q_e - separation,
        dc_profile=flip(model.dc_profile),
        dipole_profile=flip(model.dipole_profile),
    )


def resolved_dc_profile(model: HqrModel) -> GaussianProfile:
    """Diabatic-coupling profile with a concrete center.

    A zero-amplitude profile never needs a center (the term vanishes), so
    it resolves to center 0 without requiring a crossing to exist.
    """
    p = model.dc_profile
    if p.center is not None:
        return p
    if p.amplitude == 0.0:
        return replace(p, center=0.0)
    return replace(p, center=crossing_point(model))


def resolved_dipole_profile(model: HqrModel) -> GaussianProfile:
    """Transition-dipole profile with a concrete center."""
    p = model.dipole_profile
    if p.center is not None:
        return p
    if p.amplitude == 0.0:
        return replace(p, center=0.0)
    return replace(p, center=crossing_point(model))
