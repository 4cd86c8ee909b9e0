"""Geometric kernels and spin-mediator matrix elements for the 1D bilayer.

The bilayer plane fixes the azimuth of the core-spin vector R_qm = (x, 0, rho)
with the quantization axis along rho: cos(eta) = rho/R, sin(eta) = |x|/R, and
the azimuthal phase e^{-i nu} collapses to sign(x).  All kernels take the
in-plane separation x and the interlayer distance rho in atomic units and
return values in atomic units; dipole prefactors are applied by the caller.

Charge-dipole channels (molecular spin encoding), per intermediate-state
magnetic quantum number of the p electron:

    m_l = 0 :  (sin^2 eta - 2 cos^2 eta)/R^3 * I3(R)  +  T0(R)
    m_l = +-1: sqrt(3/2) sin(eta) cos(eta) sign(x) / R^3 * I3(R)

with I3(R) the partial radial integral of r^3 R_ns R_np and T0(R) the
residual overlap integral of R_ns R_np beyond R.  Dipole-dipole channels
(Rydberg spin encoding) are pure geometry: x rho / R^5 for the spin-flip
element and (1 - 3 rho^2/R^2)/R^3 for the state-diagonal one.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bands import BlochBands
from .constants import m_to_au
from .radial import RadialSolution, cumulative_moment


class KernelGeometryWarning(UserWarning):
    """Spin-mediator distance reaches inside the Rydberg core region."""


@dataclass(frozen=True)
class BilayerGeometry:
    """Two parallel 1D arrays: spins (period L_spin) and mediators (L_at)."""

    rho_m: float
    spin_period_m: float
    mediator_period_m: float
    n_spins: int
    n_mediator_sites: int

    def __post_init__(self):
        if self.rho_m <= 0 or self.spin_period_m <= 0 or self.mediator_period_m <= 0:
            raise ValueError("all lengths must be positive")
        if self.n_spins < 1 or self.n_mediator_sites < 1:
            raise ValueError("need at least one spin and one mediator site")

    @property
    def rho_au(self) -> float:
        return m_to_au(self.rho_m)

    @property
    def mediator_period_au(self) -> float:
        return m_to_au(self.mediator_period_m)

    def spin_site_indices(self) -> np.ndarray:
        n = self.n_spins
        return np.arange(-(n // 2), n - n // 2)

    def spin_positions_au(self, sites=None) -> np.ndarray:
        if sites is None:
            sites = self.spin_site_indices()
        return np.asarray(sites) * m_to_au(self.spin_period_m)


# ---------------------------------------------------------------------------
# Radial lookup tables consumed by the charge-dipole kernels
# ---------------------------------------------------------------------------

class RadialKernelTables:
    """I3(R), tail overlap T0(R) and containment C(R) for one level pair.

    Values beyond the radial grid saturate (I3 -> full dipole, T0 -> 0,
    C -> 1); inside r_core the pair integrals are zero by construction.
    """

    def __init__(self, sol_a: RadialSolution, sol_b: RadialSolution | None = None):
        if sol_b is None:
            sol_b = sol_a
        self.sol_a, self.sol_b = sol_a, sol_b
        self._r3, self._cum3 = cumulative_moment(sol_a, sol_b, 3)
        self._r0, self._cum0 = cumulative_moment(sol_a, sol_b, 0)
        _, cum2 = cumulative_moment(sol_a, sol_a, 2)
        self._cum2 = cum2 / cum2[-1]
        self.dipole_au = float(self._cum3[-1])
        self.r_core = max(sol_a.r_core, sol_b.r_core)

    def i3(self, R):
        return np.interp(R, self._r3, self._cum3, left=0.0, right=self._cum3[-1])

    def tail0(self, R):
        full = self._cum0[-1]
        head = np.interp(R, self._r0, self._cum0, left=0.0, right=full)
        return full - head

    def containment(self, R):
        return np.interp(R, self._r3, self._cum2, left=0.0, right=1.0)


def _check_core(R_min: float, tables: RadialKernelTables):
    if R_min < tables.r_core:
        warnings.warn(
            f"spin-mediator distance {R_min:.1f} a.u. inside the Rydberg core "
            f"cutoff {tables.r_core:.1f} a.u.; kernel values there are unreliable",
            KernelGeometryWarning, stacklevel=3)


def charge_dipole_m0(x_au, rho_au: float, tables: RadialKernelTables):
    """Delta m_l = 0 charge-dipole kernel, real, in a.u. (per unit spin dipole)."""
    x = np.asarray(x_au, dtype=float)
    r2 = x * x + rho_au * rho_au
    R = np.sqrt(r2)
    _check_core(float(R.min()), tables)
    geom = (x * x - 2.0 * rho_au * rho_au) / (r2 * r2 * R)
    return geom * tables.i3(R) + tables.tail0(R)


def charge_dipole_m1(x_au, rho_au: float, tables: RadialKernelTables):
    """|Delta m_l| = 1 charge-dipole kernel; odd in x (planar azimuth folded
    into sign(x)), returned real."""
    x = np.asarray(x_au, dtype=float)
    r2 = x * x + rho_au * rho_au
    R = np.sqrt(r2)
    _check_core(float(R.min()), tables)
    return math.sqrt(1.5) * x * rho_au / (r2 * r2 * R) * tables.i3(R)


def same_parity_residual(x_au, rho_au: float, tables: RadialKernelTables):
    """ns<->ns residual kernel rho (1 - C(R))/R^3 (per unit state dipole)."""
    x = np.asarray(x_au, dtype=float)
    r2 = x * x + rho_au * rho_au
    R = np.sqrt(r2)
    return rho_au * (1.0 - tables.containment(R)) / (r2 * R)


def dd_flip(x_au, rho_au: float, tables=None):
    """Spin-flip dipole-dipole kernel x rho / R^5 (Rydberg encoding)."""
    x = np.asarray(x_au, dtype=float)
    r2 = x * x + rho_au * rho_au
    return x * rho_au / (r2 * r2 * np.sqrt(r2))


def dd_diag(x_au, rho_au: float, tables=None):
    """State-diagonal dipole-dipole kernel (1 - 3 rho^2/R^2)/R^3."""
    x = np.asarray(x_au, dtype=float)
    r2 = x * x + rho_au * rho_au
    return (1.0 - 3.0 * rho_au * rho_au / r2) / (r2 * np.sqrt(r2))


KERNELS = {
    "cd_m0": charge_dipole_m0,
    "cd_m1": charge_dipole_m1,
    "same_parity": same_parity_residual,
    "dd_flip": dd_flip,
    "dd_diag": dd_diag,
}


def write_kernel_profile_csv(path, x_au, values_by_channel: dict):
    """Profile export: (x_qm, kernel_value_re, kernel_value_im, channel)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x_qm_au", "kernel_value_re", "kernel_value_im", "channel"])
        for channel, vals in values_by_channel.items():
            vals = np.asarray(vals, dtype=complex)
            for x, v in zip(x_au, vals):
                w.writerow([repr(float(x)), repr(v.real), repr(v.imag), channel])


# ---------------------------------------------------------------------------
# Direct spin-spin dipole terms and the magic angle
# ---------------------------------------------------------------------------

def tilted_dipole_coefficients(theta_rad: float, r_au: float) -> dict:
    """Angular coefficients of the direct dipole-dipole interaction between
    two spins whose quantization axis is tilted by theta from the interspin
    direction: resonant (d+d- + d-d+ + 2 dz dz), cross (d+-dz), and
    double-flip (d+d+ + d-d-) families, each in a.u. per dipole product."""
    if not 0.0 <= theta_rad <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    r3 = r_au ** 3
    return {
        "resonant": (1.0 - 3.0 * c * c) / (2.0 * r3),
        "cross": (3.0 / math.sqrt(2.0)) * s * c / (2.0 * r3),
        "double_flip": -1.5 * s * s / (2.0 * r3),
    }


MAGIC_ANGLE_RAD = math.acos(1.0 / math.sqrt(3.0))


def direct_dd_estimate_hz(d_z_au: float, r_au: float) -> float:
    """Order-of-magnitude resonant direct coupling d_z^2 / R^3, in Hz."""
    from .constants import au_to_hz
    return au_to_hz(d_z_au * d_z_au / r_au ** 3)


# ---------------------------------------------------------------------------
# Bloch-function matrix elements
# ---------------------------------------------------------------------------

class BlochOverlaps:
    """Quadrature engine for V = (1/(N L)) int u_k0* u_k K(X - X_m) e^{-i(k-k0)X} dX.

    Fixed-order Gauss-Legendre nodes per mediator lattice cell, vectorized
    over spins and (k, nu) pairs; the integration window is the full
    mediator array.  Positions are handled in units of L_at internally.
    """

    def __init__(self, bands: BlochBands, geometry: BilayerGeometry,
                 gl_order: int = 48):
        if abs(bands.spec.period_m - geometry.mediator_period_m) > 1e-15:
            raise ValueError("band structure and geometry disagree on L_at")
        self.bands = bands
        self.geometry = geometry
        self.gl_order = gl_order
        n_med = geometry.n_mediator_sites
        nodes, weights = np.polynomial.legendre.leggauss(gl_order)
        cells = np.arange(-(n_med // 2), n_med - n_med // 2)
        # node positions in units of L_at, cells centered on mediator sites
        self.x_L = (cells[:, None] + 0.5 * nodes[None, :]).ravel()
        self.w_L = np.tile(0.5 * weights, n_med)
        self._kv_cache: dict = {}
        # u_k(x) e^{-ikx} rows are built lazily per (ik, nu)
        self._phase_s = np.exp(
            2j * np.pi * np.outer(self.x_L, bands.s_values))

    def n_nodes(self) -> int:
        return self.x_L.size

    def bloch_row(self, ik: int, nu: int) -> np.ndarray:
        """u_k^(nu)(x) e^{-i k x} on the quadrature nodes."""
        key = (ik, nu)
        row = self._kv_cache.get(key)
        if row is None:
            u = self._phase_s @ self.bands.coeffs[ik, nu - 1].astype(complex)
            plane = np.exp(-1j * np.pi * self.bands.k_over_K[ik] * self.x_L)
            row = u * plane
            self._kv_cache[key] = row
        return row

    def bloch_matrix(self, kv_list) -> np.ndarray:
        """Stack of bloch_row for (ik, nu) pairs: (n_kv, n_nodes)."""
        return np.vstack([self.bloch_row(ik, nu) for ik, nu in kv_list])

    def kernel_on_nodes(self, kernel, tables, spin_positions_au) -> np.ndarray:
        """K(X - X_m) on the nodes for each spin: (n_spin, n_nodes)."""
        L_au = self.geometry.mediator_period_au
        x_au = self.x_L * L_au
        rho = self.geometry.rho_au
        rows = [np.asarray(kernel(x_au - xm, rho, tables), dtype=float)
                for xm in np.atleast_1d(spin_positions_au)]
        return np.asarray(rows)

    def elements(self, kernel_nodes: np.ndarray, k0_pair, kv_list,
                 bloch_mat: np.ndarray | None = None) -> np.ndarray:
        """Matrix elements V[spin, kv] in kernel units (prefactors excluded).

        kernel_nodes comes from kernel_on_nodes; k0_pair = (ik0, nu0).
        """
        if bloch_mat is None:
            bloch_mat = self.bloch_matrix(kv_list)
        f = np.conj(self.bloch_row(*k0_pair))[None, :] * bloch_mat
        weighted = kernel_nodes * self.w_L[None, :]
        return (weighted @ f.T) / self.geometry.n_mediator_sites

    def quadrature_deviation(self, kernel, tables, spin_positions_au,
                             k0_pair, kv_list) -> float:
        """Relative change of the elements when the per-cell order is raised
        by 16 points; reported so non-converged quadrature is visible."""
        probe = BlochOverlaps(self.bands, self.geometry, self.gl_order + 16)
        a = self.elements(self.kernel_on_nodes(kernel, tables,
                                               spin_positions_au),
                          k0_pair, kv_list)
        b = probe.elements(probe.kernel_on_nodes(kernel, tables,
                                                 spin_positions_au),
                           k0_pair, kv_list)
        scale = np.abs(b).max()
        return float(np.abs(a - b).max() / scale) if scale > 0 else 0.0


def phase_split(v_element: complex, k_over_K: float, k0_over_K: float,
                x_m_over_L: float) -> complex:
    """Return c with V = c e^{-i(k-k0)X_m}; |c| is X_m-independent in the
    array interior."""
    phase = np.exp(-1j * np.pi * (k_over_K - k0_over_K) * x_m_over_L)
    return v_element / phase


# ---------------------------------------------------------------------------
# Plane-wave (RKKY-style) diagnostics
# ---------------------------------------------------------------------------

def brillouin_sign_sum(p: int, n_cells: int) -> complex:
    """Sum over the first Brillouin zone, both zone-edge points included,
    of e^{i k p L}; equals (-1)^p for |p| < N/2 on a matched spin lattice."""
    kappa = np.arange(-(n_cells // 2), n_cells // 2 + 1)
    return complex(np.exp(2j * np.pi * kappa * p / n_cells).sum())


def plane_wave_envelope(p, rho_over_L: float = 1.0):
    """Distant-spin magnitude model |J(p)| ~ 1/(R_qi^3 R_qm^3) with both
    kernel distances at the interspin separation sqrt((pL)^2 + rho^2);
    approaches the 1/|X_i - X_m|^6 falloff from above."""
    p = np.asarray(p, dtype=float)
    return ((p * p + rho_over_L * rho_over_L) ** -3)


def fit_log_slope(p_values, magnitudes) -> float:
    """Least-squares slope of log|J| vs log p."""
    lp = np.log(np.asarray(p_values, dtype=float))
    lv = np.log(np.asarray(magnitudes, dtype=float))
    a = np.vstack([lp, np.ones_like(lp)]).T
    slope, _ = np.linalg.lstsq(a, lv, rcond=None)[0]
    return float(slope)
