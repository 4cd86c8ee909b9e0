"""Physical constants and unit handling.

All internal heavy numerics run in Hartree atomic units; everything that
crosses the package boundary (configs, CSV files, function signatures that
say so) is in SI or Hz.  Energies quoted "in Hz" mean E/h throughout.
"""

from __future__ import annotations

import re

from scipy.constants import physical_constants, c as C_C, hbar as HBAR_SI, h as H_SI

BOHR_M = physical_constants["Bohr radius"][0]
HARTREE_HZ = physical_constants["hartree-hertz relationship"][0]
AMU_KG = physical_constants["atomic mass constant"][0]
E_AU_CM = physical_constants["atomic unit of electric dipole mom."][0] * 100.0  # C*cm, unused
DEBYE_CM = 1.0e-21 / C_C  # 1 D in C*m
DIPOLE_AU_CM = physical_constants["atomic unit of electric dipole mom."][0]
DEBYE_AU = DEBYE_CM / DIPOLE_AU_CM  # 1 D = 0.3934... e*a0
CM1_HZ = C_C * 100.0  # 1 cm^-1 in Hz


def hz_to_au(f_hz):
    """Convert an E/h frequency in Hz to Hartree."""
    return f_hz / HARTREE_HZ


def au_to_hz(e_au):
    """Convert a Hartree energy to an E/h frequency in Hz."""
    return e_au * HARTREE_HZ


def m_to_au(x_m):
    return x_m / BOHR_M


def au_to_m(x_au):
    return x_au * BOHR_M


def debye_to_au(d_debye):
    return d_debye * DEBYE_AU


def recoil_energy_hz(period_m: float, mass_kg: float) -> float:
    """Lattice recoil energy hbar^2 (pi/L)^2 / 2M, returned as E/h in Hz."""
    k = 3.141592653589793 / period_m
    return (HBAR_SI * k) ** 2 / (2.0 * mass_kg) / H_SI


# ---------------------------------------------------------------------------
# Quantity strings.  Config files carry explicit units ("500 nm", "2.5 MHz",
# "-1 Erec"); silent unit mistakes are the dominant failure mode in this
# domain, so bare numbers are rejected for dimensional quantities.
# ---------------------------------------------------------------------------

_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9,
           "a0": BOHR_M, "bohr": BOHR_M}
_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12,
         "cm-1": CM1_HZ, "au": HARTREE_HZ, "hartree": HARTREE_HZ}
_DIPOLE = {"d": DEBYE_AU, "debye": DEBYE_AU, "au": 1.0, "ea0": 1.0}
_MASS = {"u": AMU_KG, "amu": AMU_KG, "kg": 1.0}
_ANGLE = {"rad": 1.0, "deg": 3.141592653589793 / 180.0}

_UNIT_TABLES = {
    "length": (_LENGTH, "m"),
    "frequency": (_FREQ, "Hz"),
    "dipole": (_DIPOLE, "e*a0"),
    "mass": (_MASS, "kg"),
    "angle": (_ANGLE, "rad"),
}

_QTY_RE = re.compile(r"^\s*([+-]?[0-9.eE+-]+)\s*([A-Za-zµ][A-Za-z0-9^*/µ-]*)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text, kind: str) -> float:
    """Parse "value unit" into the package-internal base unit for `kind`.

    Kinds: length -> m, frequency -> Hz, dipole -> e*a0, mass -> kg,
    angle -> rad.  Lattice depths additionally accept "Erec" and are handled
    by the caller (the recoil energy depends on the lattice itself).
    """
    if isinstance(text, (int, float)):
        raise UnitError(
            f"bare number {text!r} for a {kind} quantity; write it with an "
            f"explicit unit string, e.g. '500 nm'"
        )
    m = _QTY_RE.match(str(text))
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    table, base = _UNIT_TABLES[kind]
    factor = table.get(unit.lower())
    if factor is None:
        raise UnitError(
            f"unknown {kind} unit {unit!r} (base unit {base}; "
            f"accepted: {sorted(table)})"
        )
    return value * factor


def parse_depth(text, e_rec_hz: float) -> float:
    """Parse a lattice depth into Hz; accepts frequency units or 'Erec'."""
    m = _QTY_RE.match(str(text))
    if m and m.group(2).lower() in ("erec", "er"):
        return float(m.group(1)) * e_rec_hz
    return parse_quantity(text, "frequency")
