"""Unit conversion layer.

Every number handed to the physics modules is in Hartree atomic units:
energies in hartree, lengths in bohr, masses in electron masses, times in
atomic time units.  User-facing inputs and outputs (config files, CSV
columns) carry explicit units and pass through this module exactly once on
the way in and once on the way out.

Conversion factors are pinned here so that round-trips are reproducible to
double precision; do not substitute values from another CODATA release.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "HARTREE_PER_EV",
    "HARTREE_PER_WAVENUMBER",
    "ELECTRON_MASSES_PER_AMU",
    "ATOMIC_TIME_PER_FS",
    "Unit",
    "Quantity",
    "UnitError",
    "parse_unit",
    "to_atomic",
    "from_atomic",
]

# 1 eV in hartree
HARTREE_PER_EV: float = 0.036749322176
# 1 cm^-1 in hartree
HARTREE_PER_WAVENUMBER: float = 4.556335253e-6
# 1 unified atomic mass unit in electron masses
ELECTRON_MASSES_PER_AMU: float = 1822.888486209
# 1 femtosecond in atomic time units
ATOMIC_TIME_PER_FS: float = 41.341373336


class UnitError(ValueError):
    """Raised for unknown unit tokens or unit/quantity mismatches."""


class Unit(enum.Enum):
    HARTREE = "hartree"
    EV = "eV"
    WAVENUMBER = "cm-1"
    BOHR = "bohr"
    AMU = "amu"
    ELECTRON_MASS = "me"
    FEMTOSECOND = "fs"
    ATOMIC_TIME = "atu"
    DIMENSIONLESS = "1"


# Multiply a value in `unit` by this factor to express it in atomic units.
_TO_ATOMIC: dict[Unit, float] = {
    Unit.HARTREE: 1.0,
    Unit.EV: HARTREE_PER_EV,
    Unit.WAVENUMBER: HARTREE_PER_WAVENUMBER,
    Unit.BOHR: 1.0,
    Unit.AMU: ELECTRON_MASSES_PER_AMU,
    Unit.ELECTRON_MASS: 1.0,
    Unit.FEMTOSECOND: ATOMIC_TIME_PER_FS,
    Unit.ATOMIC_TIME: 1.0,
    Unit.DIMENSIONLESS: 1.0,
}

# Accepted spellings in config files and curve headers.
_ALIASES: dict[str, Unit] = {
    "hartree": Unit.HARTREE,
    "ha": Unit.HARTREE,
    "au": Unit.HARTREE,
    "ev": Unit.EV,
    "cm-1": Unit.WAVENUMBER,
    "cm^-1": Unit.WAVENUMBER,
    "1/cm": Unit.WAVENUMBER,
    "wavenumber": Unit.WAVENUMBER,
    "bohr": Unit.BOHR,
    "amu": Unit.AMU,
    "me": Unit.ELECTRON_MASS,
    "m_e": Unit.ELECTRON_MASS,
    "fs": Unit.FEMTOSECOND,
    "atu": Unit.ATOMIC_TIME,
    "t_au": Unit.ATOMIC_TIME,
    "1": Unit.DIMENSIONLESS,
    "": Unit.DIMENSIONLESS,
}


@dataclass(frozen=True)
class Quantity:
    """A scalar with an explicit unit, used at the package boundary."""

    value: float
    unit: Unit

    def atomic(self) -> float:
        return to_atomic(self.value, self.unit)


def parse_unit(token: str) -> Unit:
    """Map a unit spelling to a Unit member.

    Raises UnitError for tokens outside the accepted alias set; the
    message lists the canonical spellings so config errors are actionable.
    """
    key = token.strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    known = ", ".join(sorted(set(u.value for u in Unit))) or ""
    raise UnitError(f"unknown unit {token!r} (expected one of: {known})")


def to_atomic(value: float, unit: Unit) -> float:
    """Convert value in `unit` to atomic units."""
    try:
        return value * _TO_ATOMIC[unit]
    except KeyError:  # pragma: no cover - Unit enum is closed
        raise UnitError(f"no conversion registered for {unit}")


def from_atomic(value: float, unit: Unit) -> float:
    """Convert value in atomic units to `unit`."""
    try:
        return value / _TO_ATOMIC[unit]
    except KeyError:  # pragma: no cover
        raise UnitError(f"no conversion registered for {unit}")
