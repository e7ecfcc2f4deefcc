"""Unit conversion contracts.

Expected values below were computed by direct arithmetic from the pinned
conversion factors (multiplication only), independent of the module code.
"""
import math

import pytest
from hypothesis import given, strategies as st

from cavmol import units
from cavmol.units import Quantity, Unit, UnitError, from_atomic, parse_unit, to_atomic


def test_pinned_constants():
    assert units.HARTREE_PER_EV == 0.036749322176
    assert units.HARTREE_PER_WAVENUMBER == 4.556335253e-6
    assert units.ELECTRON_MASSES_PER_AMU == 1822.888486209
    assert units.ATOMIC_TIME_PER_FS == 41.341373336


@pytest.mark.parametrize(
    "value,unit,expected",
    [
        (0.2, Unit.EV, 0.0073498644352),
        (1.0, Unit.EV, 0.036749322176),
        (1350.0, Unit.WAVENUMBER, 0.00615105259155),
        (5600.0, Unit.WAVENUMBER, 0.0255154774168),
        (1.0, Unit.AMU, 1822.888486209),
        (35.0, Unit.FEMTOSECOND, 1446.9480667599998),
        (1.7, Unit.BOHR, 1.7),
        (3.5, Unit.HARTREE, 3.5),
        (0.16, Unit.DIMENSIONLESS, 0.16),
    ],
)
def test_to_atomic_spot_values(value, unit, expected):
    assert to_atomic(value, unit) == pytest.approx(expected, rel=1e-15)


@given(
    value=st.floats(
        min_value=1e-12, max_value=1e12, allow_nan=False, allow_infinity=False
    ),
    unit=st.sampled_from(list(Unit)),
)
def test_round_trip_identity(value, unit):
    # in -> atomic -> out must reproduce the input to 1e-14 relative
    back = from_atomic(to_atomic(value, unit), unit)
    assert back == pytest.approx(value, rel=1e-14)
    assert math.copysign(1.0, back) == 1.0


def test_round_trip_preserves_sign():
    assert from_atomic(to_atomic(-1.1, Unit.BOHR), Unit.BOHR) == -1.1


def test_quantity_atomic():
    q = Quantity(950.0, Unit.WAVENUMBER)
    assert q.atomic() == pytest.approx(950.0 * 4.556335253e-6, rel=1e-15)


@pytest.mark.parametrize(
    "token,unit",
    [
        ("eV", Unit.EV),
        ("EV", Unit.EV),
        ("cm-1", Unit.WAVENUMBER),
        ("cm^-1", Unit.WAVENUMBER),
        ("bohr", Unit.BOHR),
        ("me", Unit.ELECTRON_MASS),
        ("amu", Unit.AMU),
        ("fs", Unit.FEMTOSECOND),
        ("hartree", Unit.HARTREE),
        ("ha", Unit.HARTREE),
        ("au", Unit.HARTREE),
    ],
)
def test_parse_unit_aliases(token, unit):
    assert parse_unit(token) is unit


def test_unknown_unit_rejected():
    with pytest.raises(UnitError, match="unknown unit"):
        parse_unit("parsec")
