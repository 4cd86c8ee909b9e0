"""1D optical-lattice Bloch bands by plane-wave expansion.

The mediator lattice V(X) = V0 cos^2(K X), K = pi/L, is diagonalized per
quasimomentum in the basis u_k(X) = sum_s c_s exp(2isKX).  In recoil units
(E_rec = hbar^2 K^2 / 2M) the central equation reads

    [ (k/K + 2s)^2 + V0/(2 E_rec) ] c_s + V0/(4 E_rec) (c_{s-1} + c_{s+1})
        = (E/E_rec) c_s ,

so that V0 = 0 returns the folded free-particle parabola E_rec (k/K + 2s)^2.
Periodic boundary conditions over N cells quantize k = 2 pi kappa / (N L)
with kappa = -N/2 ... N/2 - 1 (the two zone-edge points are one state; only
the lower edge is stored).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .constants import recoil_energy_hz


class BandSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    """Mediator lattice: period (m), depth V0 (Hz, signed), cell count, mass (kg)."""

    period_m: float
    depth_hz: float
    n_cells: int
    mass_kg: float

    def __post_init__(self):
        if self.period_m <= 0 or self.mass_kg <= 0:
            raise ValueError("period and mass must be positive")
        if self.n_cells < 2 or self.n_cells % 2:
            raise ValueError("n_cells must be an even integer >= 2")

    @property
    def e_rec_hz(self) -> float:
        return recoil_energy_hz(self.period_m, self.mass_kg)

    @property
    def depth_erec(self) -> float:
        return self.depth_hz / self.e_rec_hz


@dataclass
class BlochBands:
    """Solved band structure.

    energies[ik, nu-1] are in units of E_rec and include the V0/2 offset of
    the cos^2 potential; coeffs[ik, nu-1, :] hold c_s for s = -S_max..S_max
    with sum_s |c_s|^2 = 1 and the largest-|c_s| entry made real positive.
    """

    spec: LatticeSpec
    s_max: int
    kappas: np.ndarray            # int array, -N/2 .. N/2-1
    energies: np.ndarray          # (n_k, n_bands), E_rec units
    coeffs: np.ndarray            # (n_k, n_bands, 2*s_max+1), real
    s_values: np.ndarray = field(init=False)

    def __post_init__(self):
        self.s_values = np.arange(-self.s_max, self.s_max + 1)

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]

    @property
    def k_over_K(self) -> np.ndarray:
        """k / K_at = 2 kappa / N for each stored quasimomentum."""
        return 2.0 * self.kappas / self.spec.n_cells

    def energies_hz(self) -> np.ndarray:
        return self.energies * self.spec.e_rec_hz

    def u_values(self, ik: int, nu: int, x_over_L) -> np.ndarray:
        """Periodic part u_k^(nu) at positions x/L (dimensionless)."""
        x = np.asarray(x_over_L, dtype=float)
        phases = np.exp(2j * np.pi * np.outer(x.ravel(), self.s_values))
        out = phases @ self.coeffs[ik, nu - 1].astype(complex)
        return out.reshape(x.shape)

    def phi_values(self, ik: int, nu: int, x_over_L) -> np.ndarray:
        """Full Bloch function u e^{ikX} normalized over the N-cell lattice,
        in units of 1/sqrt(L): integral of |phi|^2 dX over N L equals 1."""
        x = np.asarray(x_over_L, dtype=float)
        u = self.u_values(ik, nu, x)
        plane = np.exp(1j * np.pi * self.k_over_K[ik] * x)
        return u * plane / np.sqrt(self.spec.n_cells)

    def index_of_kappa(self, kappa: int) -> int:
        hits = np.nonzero(self.kappas == kappa)[0]
        if len(hits) != 1:
            raise KeyError(f"kappa={kappa} not on the stored grid")
        return int(hits[0])


def solve_bands(spec: LatticeSpec, s_max: int = 10, n_bands: int = 5) -> BlochBands:
    """Diagonalize the central equation for every stored quasimomentum.

    Requires s_max >= n_bands + 2 so the requested bands are converged.
    """
    if n_bands < 1:
        raise ValueError("need at least one band")
    if s_max < n_bands + 2:
        raise ValueError(f"s_max={s_max} too small for n_bands={n_bands}")
    n = spec.n_cells
    kappas = np.arange(-n // 2, n // 2)
    s = np.arange(-s_max, s_max + 1)
    v_quarter = spec.depth_erec / 4.0
    off = np.full(2 * s_max, v_quarter)
    energies = np.empty((len(kappas), n_bands))
    coeffs = np.empty((len(kappas), n_bands, 2 * s_max + 1))
    for ik, kappa in enumerate(kappas):
        diag = (2.0 * kappa / n + 2.0 * s) ** 2 + 2.0 * v_quarter
        h = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        try:
            vals, vecs = np.linalg.eigh(h)
        except np.linalg.LinAlgError as err:
            raise BandSolveError(f"eigensolver failed at kappa={kappa}: {err}")
        if not np.all(np.isfinite(vals)):
            raise BandSolveError(f"non-finite band energies at kappa={kappa}")
        energies[ik] = vals[:n_bands]
        v = vecs[:, :n_bands]
        # deterministic gauge: largest-amplitude coefficient real positive
        lead = np.argmax(np.abs(v), axis=0)
        sign = np.sign(v[lead, np.arange(n_bands)])
        sign[sign == 0] = 1.0
        coeffs[ik] = (v * sign).T
    return BlochBands(spec, s_max, kappas, energies, coeffs)


def free_particle_energies(spec: LatticeSpec, kappa: int, n_bands: int) -> np.ndarray:
    """Folded free-particle parabola E_rec (k/K + 2s)^2, sorted ascending."""
    s = np.arange(-(n_bands + 4), n_bands + 5)
    e = (2.0 * kappa / spec.n_cells + 2.0 * s) ** 2
    return np.sort(e)[:n_bands]


def write_band_csv(bands: BlochBands, path) -> None:
    """Band-structure export: (kappa, k_over_Kat, band, energy_over_Erec)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kappa", "k_over_Kat", "band", "energy_over_Erec"])
        for ik, kappa in enumerate(bands.kappas):
            for nu in range(1, bands.n_bands + 1):
                w.writerow([int(kappa), repr(bands.k_over_K[ik]), nu,
                            repr(bands.energies[ik, nu - 1])])


def convergence_report(spec: LatticeSpec, s_max: int, n_bands: int,
                       s_max_ref: int | None = None) -> dict:
    """Max |E(s_max) - E(s_max_ref)| over the zone, per band, in E_rec."""
    if s_max_ref is None:
        s_max_ref = s_max + 4
    a = solve_bands(spec, s_max, n_bands)
    b = solve_bands(spec, s_max_ref, n_bands)
    dev = np.abs(a.energies - b.energies).max(axis=0)
    return {
        "s_max": s_max,
        "s_max_ref": s_max_ref,
        "max_abs_dev_erec_per_band": dev.tolist(),
        "max_abs_dev_erec": float(dev.max()),
    }
