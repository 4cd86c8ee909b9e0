"""Atomic/molecular constants registry and the elementary formulas on top.

Rydberg level energies use the constant-quantum-defect form
E = -1/(2 (n - mu_lj)^2) Hartree; rigid-rotor molecules use E = B J(J+1).
Energies are kept in atomic units internally, exchanged in Hz (E/h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .constants import au_to_hz, debye_to_au, parse_quantity, AMU_KG


class SpeciesError(KeyError):
    """Missing species or (l, j) channel; never silently zero."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

_L_LETTER = {0: "s", 1: "p", 2: "d", 3: "f"}


@dataclass(frozen=True)
class RydbergLevel:
    """|n, l, j, mj> labels; j, mj are half-integers stored as floats."""

    n: int
    l: int
    j: float
    mj: float = 0.5

    def __post_init__(self):
        if self.n < 1 or self.l < 0:
            raise ValueError(f"bad quantum numbers n={self.n}, l={self.l}")
        if abs(self.j - self.l) != 0.5:
            raise ValueError(f"j={self.j} incompatible with l={self.l}")
        if abs(self.mj) > self.j:
            raise ValueError(f"|mj|={abs(self.mj)} exceeds j={self.j}")

    def __str__(self):
        letter = _L_LETTER.get(self.l, f"l{self.l}")
        return f"{self.n}{letter}{int(2 * self.j)}/2"


@dataclass(frozen=True)
class RotationalState:
    J: int
    mJ: int = 0

    def __post_init__(self):
        if self.J < 0 or abs(self.mJ) > self.J:
            raise ValueError(f"bad rotational state J={self.J}, mJ={self.mJ}")


@dataclass(frozen=True)
class MoleculeSpec:
    """Rigid-rotor polar molecule: rotational constant (Hz) and dipole (a.u.)."""

    label: str
    b_hz: float
    d_au: float

    def __post_init__(self):
        if self.b_hz <= 0 or self.d_au <= 0:
            raise ValueError(f"{self.label}: B and d must be positive")


class QuantumDefectTable:
    """Per-(l, j) quantum defects for one atomic species."""

    def __init__(self, label: str, mass_u: float, channels: dict):
        self.label = label
        self.mass_u = mass_u
        self.mass_kg = mass_u * AMU_KG
        self._channels = channels  # (l, 2j) -> dict(mu=..., n_valid=...)
        for (l, twoj), ch in channels.items():
            if ch["mu"] < 0:
                raise ValueError(f"{label} ({l},{twoj}/2): negative defect")

    def defect(self, l: int, j: float, n: int | None = None) -> float:
        ch = self._channels.get((l, int(round(2 * j))))
        if ch is None:
            raise SpeciesError(
                f"no quantum defect for {self.label} l={l}, j={j}; "
                f"known channels: {sorted(self._channels)}"
            )
        rng = ch.get("n_valid")
        if n is not None and rng and not (rng[0] <= n <= rng[1]):
            raise SpeciesError(
                f"{self.label} l={l}, j={j}: defect tabulated for "
                f"n in {rng}, requested n={n}"
            )
        return ch["mu"]

    def channels(self):
        return sorted(self._channels)


# ---------------------------------------------------------------------------
# Constants file
# ---------------------------------------------------------------------------

def _parse_channel_key(key: str):
    l_s, twoj_s = key.split(",")
    return int(l_s), int(twoj_s)


class SpeciesRegistry:
    """Contents of one species.yaml constants file."""

    def __init__(self, raw: dict, origin: str):
        self.origin = origin
        if raw.get("version") != 1:
            raise ValueError(f"{origin}: unsupported constants-file version")
        self._atoms = {}
        for label, entry in raw.get("atoms", {}).items():
            channels = {
                _parse_channel_key(k): v for k, v in entry["defects"].items()
            }
            self._atoms[label] = QuantumDefectTable(
                label, float(entry["mass_u"]), channels
            )
        self._molecules = {}
        for label, entry in raw.get("molecules", {}).items():
            b_hz = parse_quantity(entry["rotational_constant"], "frequency")
            d_au = parse_quantity(entry["dipole_moment"], "dipole")
            self._molecules[label] = MoleculeSpec(label, b_hz, d_au)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SpeciesRegistry":
        if path is None:
            ref = resources.files("bilayerspin").joinpath("data/species.yaml")
            with ref.open("r", encoding="utf-8") as fh:
                return cls(yaml.safe_load(fh), str(ref))
        with open(path, encoding="utf-8") as fh:
            return cls(yaml.safe_load(fh), str(path))

    def atom(self, label: str) -> QuantumDefectTable:
        try:
            return self._atoms[label]
        except KeyError:
            raise SpeciesError(
                f"unknown atom {label!r} in {self.origin}; "
                f"available: {sorted(self._atoms)}"
            ) from None

    def molecule(self, label: str) -> MoleculeSpec:
        try:
            return self._molecules[label]
        except KeyError:
            raise SpeciesError(
                f"unknown molecule {label!r} in {self.origin}; "
                f"available: {sorted(self._molecules)}"
            ) from None


_default_registry: SpeciesRegistry | None = None


def default_registry() -> SpeciesRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = SpeciesRegistry.load()
    return _default_registry


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def effective_n(level: RydbergLevel, defects: QuantumDefectTable) -> float:
    nstar = level.n - defects.defect(level.l, level.j, level.n)
    if nstar <= 0:
        raise ValueError(f"non-positive effective quantum number for {level}")
    return nstar


def rydberg_energy_au(level: RydbergLevel, defects: QuantumDefectTable) -> float:
    """Bound-level energy -1/(2 n*^2) in Hartree (negative)."""
    return -0.5 / effective_n(level, defects) ** 2


def rydberg_energy_hz(level: RydbergLevel, defects: QuantumDefectTable) -> float:
    return au_to_hz(rydberg_energy_au(level, defects))


def transition_hz(upper: RydbergLevel, lower: RydbergLevel,
                  defects: QuantumDefectTable) -> float:
    """Signed E_upper - E_lower as a frequency in Hz."""
    return au_to_hz(
        rydberg_energy_au(upper, defects) - rydberg_energy_au(lower, defects)
    )


def rotational_energy_hz(spec: MoleculeSpec, J: int) -> float:
    """Rigid-rotor level B J(J+1) in Hz."""
    if J < 0:
        raise ValueError("J must be non-negative")
    return spec.b_hz * J * (J + 1)


def forster_defect_hz(spin_transition_hz: float, upper: RydbergLevel,
                      lower: RydbergLevel, defects: QuantumDefectTable) -> float:
    """Energy mismatch between a mediator Rydberg transition and the spin
    transition, Delta = (E_upper - E_lower) - E_spin, in Hz."""
    return transition_hz(upper, lower, defects) - spin_transition_hz


# ---------------------------------------------------------------------------
# Rotational dipole matrix elements
# ---------------------------------------------------------------------------

def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol by the Racah sum; exact-integer factorials, float out."""
    if (m1 + m2 + m3) != 0:
        return 0.0
    if not (abs(j1 - j2) <= j3 <= j1 + j2):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    # all ji +- mi and triangle combinations must be integers
    def _int(x):
        if abs(x - round(x)) > 1e-9:
            raise ValueError("non-integral angular momentum combination")
        return int(round(x))

    f = math.factorial
    a = _int(j1 + j2 - j3)
    b = _int(j1 - j2 + j3)
    c = _int(-j1 + j2 + j3)
    tri = f(a) * f(b) * f(c) / f(_int(j1 + j2 + j3 + 1))
    pref = tri * f(_int(j1 + m1)) * f(_int(j1 - m1)) * f(_int(j2 + m2)) \
        * f(_int(j2 - m2)) * f(_int(j3 + m3)) * f(_int(j3 - m3))
    tmin = max(0, _int(j2 - j3 - m1), _int(j1 - j3 + m2))
    tmax = min(a, _int(j1 - m1), _int(j2 + m2))
    s = 0.0
    for t in range(tmin, tmax + 1):
        denom = (f(t) * f(t - _int(j2 - j3 - m1)) * f(t - _int(j1 - j3 + m2))
                 * f(a - t) * f(_int(j1 - m1) - t) * f(_int(j2 + m2) - t))
        s += (-1) ** t / denom
    return (-1) ** _int(j1 - j2 - m3) * math.sqrt(pref) * s


def rotational_dipole_au(spec: MoleculeSpec, final: RotationalState,
                         initial: RotationalState, component: int) -> float:
    """<J' mJ' | d_q | J mJ> for a rigid rotor, spherical component q in
    {-1, 0, +1}; returns a signed value in atomic units.

    Selection rules (Delta J = +-1, mJ' = mJ + q) give exact zeros.
    """
    if component not in (-1, 0, 1):
        raise ValueError("spherical component must be -1, 0 or +1")
    jp, mp = final.J, final.mJ
    j, m = initial.J, initial.mJ
    # reduced matrix element of C^(1) between rigid-rotor states
    red = ((-1) ** mp
           * math.sqrt((2 * j + 1) * (2 * jp + 1))
           * wigner_3j(jp, 1, j, -mp, component, m)
           * wigner_3j(jp, 1, j, 0, 0, 0))
    return spec.d_au * red
