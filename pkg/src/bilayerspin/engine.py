"""Second-order effective spin-spin couplings from spin-mediator elements.

A Setup bundles the bilayer geometry, the mediator band structure, and a
set of virtual-excitation channels.  Each channel carries the internal
energy offset of the virtual mediator state and, per spin-state pair
(alpha, beta), a dipole coefficient together with the geometric kernel it
multiplies.  The matrix element of the full interaction is then

    V^m_{alpha beta}(k0 nu0 -> k nu) = coef_{alpha beta} * W_kernel[m, k nu]

with W the Bloch-function overlap integral computed in kernels.BlochOverlaps.

From these elements the engine assembles the coupling families (all in Hz):

    Jzz[i,m]  = -2 Re sum (Vi_uu - Vi_dd)(Vm_uu - Vm_dd)^* / D
    J+-[i,m]  = -  sum [ Vi_ud Vm_ud^* / (D - E) + Vm_du Vi_du^* / (D + E) ]
    Jperp     = 2 J+-  (reality verified, not assumed)
    b_z[i]    = single-site flip/diagonal shifts plus the pair cross terms
    b0[i,m]   = density-density constant (exported, never used in the chain)

where D is the virtual-state energy relative to the initial mediator state
(internal plus motional) and E the spin transition energy.  Every channel
enters with the standard second-order sign; the same expressions follow
from the K-coefficient tensor (k_coefficients) combined per the spin
dictionary, which the tests cross-check against an exact small-matrix
block-diagonalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bands import BlochBands
from .constants import HARTREE_HZ
from .kernels import KERNELS, BilayerGeometry, BlochOverlaps

log = logging.getLogger(__name__)

SPIN_PAIRS = ("uu", "ud", "du", "dd")


class SWValidityError(RuntimeError):
    """A second-order energy denominator is too close to a matrix element."""


@dataclass(frozen=True)
class Channel:
    """One virtual mediator state (internal) reachable from the initial one.

    couplings maps 'uu'/'ud'/'du'/'dd' to (dipole coefficient in a.u.,
    kernel id); absent entries are exact zeros.  is_initial_manifold marks
    the same-parity channel whose (k nu) = (k0 nu0) diagonal belongs to the
    degenerate manifold and is excluded from the second-order sums.
    """

    label: str
    delta_int_hz: float
    couplings: dict
    is_initial_manifold: bool = False


@dataclass
class MediatorPrep:
    """Initial mediator internal/motional distribution.

    kind 'superatom' averages with the 1/N_a collective weight (net factor
    one); 'dressed' multiplies by |c_ns|^2 N_a instead.  motional 'bec' is
    a delta at (k0 = 0, nu0 = 1); 'gaussian' weights |c|^2 ~ exp(-k0^2 /
    kappa0^2) over the lowest band; 'table' takes explicit weights per
    (kappa, nu0).
    """

    kind: str = "superatom"
    motional: str = "bec"
    kappa0_over_piL: float = 0.0
    weights: dict | None = None      # (kappa:int, nu0:int) -> weight
    c_ns2: float = 1.0

    @staticmethod
    def dressed_fraction(omega_hz: float, delta_hz: float) -> float:
        """|c_ns|^2 of a laser-dressed ground/Rydberg pair."""
        s = np.hypot(delta_hz / 2.0, omega_hz)
        return float((s - delta_hz / 2.0) / (2.0 * s))

    def weight_list(self, bands: BlochBands):
        """Normalized [(kappa_index, nu0, weight)] on the stored k grid."""
        if self.motional == "bec":
            return [(bands.index_of_kappa(0), 1, 1.0)]
        if self.motional == "gaussian":
            if self.kappa0_over_piL <= 0.0:
                return [(bands.index_of_kappa(0), 1, 1.0)]
            k_rel = bands.k_over_K  # k0 / (pi/L)
            w = np.exp(-(k_rel / self.kappa0_over_piL) ** 2)
            w = w / w.sum()
            return [(ik, 1, float(wi)) for ik, wi in enumerate(w)
                    if wi > 1e-14]
        if self.motional == "table":
            if not self.weights:
                raise ValueError("table prep requires weights")
            total = float(sum(self.weights.values()))
            if abs(total - 1.0) > 1e-10:
                raise ValueError(f"prep weights sum to {total}, not 1")
            out = []
            for (kappa, nu0), w in sorted(self.weights.items()):
                out.append((bands.index_of_kappa(int(kappa)), int(nu0),
                            float(w)))
            return out
        raise ValueError(f"unknown motional prep {self.motional!r}")

    def overall_factor(self, n_mediators: int) -> float:
        if self.kind == "superatom":
            return 1.0
        if self.kind == "dressed":
            return self.c_ns2 * n_mediators
        raise ValueError(f"unknown prep kind {self.kind!r}")


@dataclass
class Setup:
    """Everything needed to evaluate the effective couplings."""

    kind: str
    geometry: BilayerGeometry
    bands: BlochBands
    e_spin_hz: float
    channels: list
    kernels: dict                    # kernel id -> (callable, tables or None)
    sw_margin: float = 100.0
    gl_order: int = 48
    derived: dict = field(default_factory=dict)
    _overlaps: BlochOverlaps | None = None

    @property
    def overlaps(self) -> BlochOverlaps:
        if self._overlaps is None:
            self._overlaps = BlochOverlaps(self.bands, self.geometry,
                                           self.gl_order)
        return self._overlaps

    def kv_list(self):
        return [(ik, nu) for ik in range(len(self.bands.kappas))
                for nu in range(1, self.bands.n_bands + 1)]


@dataclass
class CouplingTable:
    """Averaged couplings on the chain, all in Hz."""

    sites: np.ndarray                # spin site indices
    positions_m: np.ndarray
    j_perp_hz: np.ndarray            # (n, n), symmetric, zero diagonal
    j_zz_hz: np.ndarray
    b_z_hz: np.ndarray               # (n,)
    b0_hz: np.ndarray                # (n, n)
    e_spin_hz: float
    provenance: dict = field(default_factory=dict)

    def pair(self, site_i: int, site_m: int):
        i = int(np.nonzero(self.sites == site_i)[0][0])
        m = int(np.nonzero(self.sites == site_m)[0][0])
        return self.j_perp_hz[i, m], self.j_zz_hz[i, m]


# ---------------------------------------------------------------------------
# Matrix elements per initial motional state
# ---------------------------------------------------------------------------

class ElementWorkspace:
    """Per-setup cache of kernel node values and Bloch rows."""

    def __init__(self, setup: Setup, spin_sites):
        self.setup = setup
        self.sites = np.asarray(spin_sites, dtype=int)
        self.positions_au = setup.geometry.spin_positions_au(self.sites)
        self.kv = setup.kv_list()
        ov = setup.overlaps
        self._bloch_mat = ov.bloch_matrix(self.kv)
        self._kernel_nodes = {}
        for kid, (fn, tables) in setup.kernels.items():
            self._kernel_nodes[kid] = ov.kernel_on_nodes(
                fn, tables, self.positions_au)
        e_kv = setup.bands.energies_hz()
        self.kv_energy_hz = np.array([e_kv[ik, nu - 1] for ik, nu in self.kv])

    def w_elements(self, k0_pair) -> dict:
        """kernel id -> W[spin, kv] in a.u. (dipole prefactors excluded)."""
        ov = self.setup.overlaps
        return {kid: ov.elements(nodes, k0_pair, self.kv, self._bloch_mat)
                for kid, nodes in self._kernel_nodes.items()}

    def channel_elements(self, k0_pair) -> list:
        """Per channel: dict alpha-beta -> V[spin, kv] in Hz, denominators.

        Returns [(channel, V_dict, D_hz[kv], keep_mask[kv])] where keep
        masks out the degenerate (k nu) = (k0 nu0) point of the initial
        manifold channel.
        """
        w = self.w_elements(k0_pair)
        ik0, nu0 = k0_pair
        e0 = self.setup.bands.energies_hz()[ik0, nu0 - 1]
        out = []
        for ch in self.setup.channels:
            v = {}
            for ab, (coef, kid) in ch.couplings.items():
                v[ab] = coef * w[kid] * HARTREE_HZ
            d = ch.delta_int_hz + self.kv_energy_hz - e0
            keep = np.ones(len(self.kv), dtype=bool)
            if ch.is_initial_manifold:
                keep = np.array([not (ik == ik0 and nu == nu0)
                                 for ik, nu in self.kv])
            out.append((ch, v, d, keep))
        return out


def _flatten(elems, e_spin_hz, margin):
    """Stack channels into flat arrays; run the validity check.

    Returns dict ab -> V[spin, flat], invD, invDmE, invDpE (flat arrays).
    """
    vs = {ab: [] for ab in SPIN_PAIRS}
    d_all, diag_like = [], []
    n_spin = None
    worst = (np.inf, None)
    for ch, v, d, keep in elems:
        d = d[keep]
        d_all.append(d)
        for ab in SPIN_PAIRS:
            arr = v.get(ab)
            if arr is None:
                continue
            arr = arr[:, keep]
            n_spin = arr.shape[0]
            vs[ab].append((len(d_all) - 1, arr))
        # validity: compare each denominator family against the largest
        # element that actually feeds it
        fams = (("D", d, ("uu", "dd")), ("D-E", d - e_spin_hz, ("ud",)),
                ("D+E", d + e_spin_hz, ("du",)))
        for name, dd, abs_used in fams:
            vmax = max((np.abs(v[ab][:, keep]).max()
                        for ab in abs_used if ab in v), default=0.0)
            if vmax <= 0:
                continue
            ratio = np.abs(dd).min() / vmax
            if ratio < worst[0]:
                worst = (ratio, f"channel {ch.label}, denominator {name}")
    ratio, where = worst
    if where is not None:
        log.info("Schrieffer-Wolff margin: min|denominator|/max|V| = %.3g (%s)",
                 ratio, where)
        if ratio < margin:
            raise SWValidityError(
                f"validity margin violated: min|denominator| = "
                f"{ratio:.3g} x max|V| < required {margin:g} x ({where}); "
                f"lower sw_margin only with a physical justification")
    lengths = [len(d) for d in d_all]
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    total = offsets[-1]
    flat = {}
    for ab in SPIN_PAIRS:
        m = np.zeros((n_spin, total), dtype=complex)
        for ci, arr in vs[ab]:
            m[:, offsets[ci]:offsets[ci + 1]] = arr
        flat[ab] = m
    d_flat = np.concatenate(d_all)
    return flat, d_flat


@dataclass
class RawCouplings:
    """Un-averaged couplings for one initial (k0, nu0), complex, in Hz."""

    j_pm: np.ndarray        # (n, n): J^{+-}
    j_zz: np.ndarray
    b_single: np.ndarray    # (n,): single-site field terms
    b_cross: np.ndarray     # (n, n): pair field terms (zero diagonal)
    b0: np.ndarray


def couplings_for_k0(setup: Setup, ws: ElementWorkspace, k0_pair) -> RawCouplings:
    """Assembled-path couplings for one initial motional state."""
    elems = ws.channel_elements(k0_pair)
    v, d = _flatten(elems, setup.e_spin_hz, setup.sw_margin)
    e = setup.e_spin_hz
    inv_d = 1.0 / d
    inv_dme = 1.0 / (d - e)
    inv_dpe = 1.0 / (d + e)

    v_ud, v_du = v["ud"], v["du"]
    j_pm = -((v_ud * inv_dme) @ v_ud.conj().T
             + np.conj((v_du * inv_dpe) @ v_du.conj().T))

    vdiff = v["uu"] - v["dd"]
    m = (vdiff * inv_d) @ vdiff.conj().T
    j_zz = -(m + np.conj(m))

    s_flip = (np.abs(v_ud) ** 2 @ inv_dme) - (np.abs(v_du) ** 2 @ inv_dpe)
    s_diag = (np.abs(v["uu"]) ** 2 - np.abs(v["dd"]) ** 2) @ inv_d
    b_single = -2.0 * (s_flip + s_diag)

    vsum = v["uu"] + v["dd"]
    cross = (vdiff * inv_d) @ vsum.conj().T
    b_cross = -(cross + np.conj(cross))
    np.fill_diagonal(b_cross, 0.0)

    # b0 = (Kuuuu + Kdddd + Kudud + Kdudu)/4; the four |Vi_a + Vm_b|^2 /D
    # combinations reduce to row sums plus one cross GEMM
    r_diag = (np.abs(v["uu"]) ** 2 + np.abs(v["dd"]) ** 2) @ inv_d
    r_ud = np.abs(v_ud) ** 2 @ inv_dme
    r_du = np.abs(v_du) ** 2 @ inv_dpe
    g = (vsum * inv_d) @ vsum.conj().T
    quad = 2.0 * np.add.outer(r_diag, r_diag) + 2.0 * np.real(g)
    flips = 2.0 * np.add.outer(r_ud, r_ud) + 2.0 * np.add.outer(r_du, r_du)
    b0 = -(quad + flips) / 4.0
    return RawCouplings(j_pm, j_zz, b_single, b_cross, b0.astype(complex))


# ---------------------------------------------------------------------------
# Averaging over the mediator preparation
# ---------------------------------------------------------------------------

def average_couplings(setup: Setup, prep: MediatorPrep, spin_sites=None,
                      provenance: dict | None = None) -> CouplingTable:
    """Average the per-(k0, nu0) couplings with the preparation weights and
    assemble the chain table; reality and symmetry are verified here."""
    geometry = setup.geometry
    if spin_sites is None:
        spin_sites = geometry.spin_site_indices()
    ws = ElementWorkspace(setup, spin_sites)
    n = len(ws.sites)
    acc = None
    for ik0, nu0, w in prep.weight_list(setup.bands):
        raw = couplings_for_k0(setup, ws, (ik0, nu0))
        fields = ("j_pm", "j_zz", "b_single", "b_cross", "b0")
        if acc is None:
            acc = RawCouplings(*[w * getattr(raw, f) for f in fields])
        else:
            for f in fields:
                setattr(acc, f, getattr(acc, f) + w * getattr(raw, f))
    factor = prep.overall_factor(geometry.n_mediator_sites)
    j_pm = factor * acc.j_pm
    j_zz = factor * acc.j_zz
    b_z = factor * (acc.b_single + acc.b_cross.sum(axis=1))
    b0 = factor * acc.b0

    scale = max(np.abs(j_pm).max(), np.abs(j_zz).max(), 1e-300)
    imag = max(np.abs(j_pm.imag).max(), np.abs(j_zz.imag).max(),
               np.abs(b_z.imag).max())
    if imag > 1e-10 * scale:
        raise RuntimeError(
            f"averaged couplings acquired imaginary parts ({imag:.3e} vs "
            f"scale {scale:.3e}); initial-state weights are inconsistent")
    j_perp = 2.0 * j_pm.real
    j_zz = j_zz.real
    np.fill_diagonal(j_perp, 0.0)
    np.fill_diagonal(j_zz, 0.0)
    asym = (np.abs(j_perp - j_perp.T).max()
            + np.abs(j_zz - j_zz.T).max())
    if asym > 1e-10 * scale:
        raise RuntimeError(f"coupling table asymmetry {asym:.3e}")

    prov = dict(provenance or {})
    prov.setdefault("prep", {"kind": prep.kind, "motional": prep.motional,
                             "kappa0_over_piL": prep.kappa0_over_piL,
                             "c_ns2": prep.c_ns2})
    prov.update(setup.derived)
    return CouplingTable(
        sites=ws.sites,
        positions_m=np.asarray(ws.sites) * geometry.spin_period_m,
        j_perp_hz=j_perp,
        j_zz_hz=j_zz,
        b_z_hz=b_z.real,
        b0_hz=b0.real,
        e_spin_hz=setup.e_spin_hz,
        provenance=prov,
    )


# ---------------------------------------------------------------------------
# kappa0 sweep (interaction-range control by the quasimomentum width)
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    kappa0_over_piL: np.ndarray
    ratios: np.ndarray        # (n_kappa, p_max) : J(p)/|J(1)| for p = 1..p_max
    j1_hz: np.ndarray

    def ratio(self, p: int):
        return self.ratios[:, p - 1]


def kappa0_sweep(setup: Setup, kappa0_grid, p_max: int = 5,
                 center_site: int = 0) -> SweepResult:
    """Signed ratios J(m+p, m)/|J(m+1, m)| versus the Gaussian width, with
    the per-k0 couplings computed once and reweighted per grid point."""
    sites = [center_site + p for p in range(0, p_max + 1)]
    ws = ElementWorkspace(setup, sites)
    bands = setup.bands
    per_k0 = {}
    for ik0 in range(len(bands.kappas)):
        raw = couplings_for_k0(setup, ws, (ik0, 1))
        per_k0[ik0] = raw.j_pm[0, :]          # couplings of center to center+p
    kappa0_grid = np.asarray(kappa0_grid, dtype=float)
    ratios = np.empty((len(kappa0_grid), p_max))
    j1 = np.empty(len(kappa0_grid))
    k_rel = bands.k_over_K
    for i, kap0 in enumerate(kappa0_grid):
        if kap0 <= 0:
            w = np.zeros(len(bands.kappas))
            w[bands.index_of_kappa(0)] = 1.0
        else:
            w = np.exp(-(k_rel / kap0) ** 2)
            w /= w.sum()
        row = sum(w[ik0] * per_k0[ik0] for ik0 in per_k0)
        j = 2.0 * row.real                    # J_perp(center, center+p)
        j1[i] = j[1]
        ratios[i] = j[1:] / abs(j[1])
    return SweepResult(kappa0_grid, ratios, j1)


# ---------------------------------------------------------------------------
# Generic K-coefficient path (per spin pair)
# ---------------------------------------------------------------------------

def k_coefficients(setup: Setup, ws: ElementWorkspace, k0_pair,
                   i_idx: int, m_idx: int) -> dict:
    """Full 16-entry K tensor for one spin pair and one initial state.

    Keys are (final, initial) two-spin labels like ('ud', 'du').  The ten
    independent entries follow the channel-resolved second-order sums; the
    rest are filled by the conjugation identity.
    """
    elems = ws.channel_elements(k0_pair)
    e = setup.e_spin_hz
    vi = {ab: [] for ab in SPIN_PAIRS}
    vm = {ab: [] for ab in SPIN_PAIRS}
    dl = []
    diag_i = {ab: 0.0 for ab in SPIN_PAIRS}
    diag_m = {ab: 0.0 for ab in SPIN_PAIRS}
    ik0, nu0 = k0_pair
    for ch, v, d, keep in elems:
        dl.append(d[keep])
        for ab in SPIN_PAIRS:
            arr = v.get(ab)
            if arr is None:
                z = np.zeros(int(keep.sum()), dtype=complex)
                vi[ab].append(z)
                vm[ab].append(z)
            else:
                vi[ab].append(arr[i_idx, keep])
                vm[ab].append(arr[m_idx, keep])
            if ch.is_initial_manifold and arr is not None:
                kv_index = ws.kv.index((ik0, nu0))
                diag_i[ab] = complex(arr[i_idx, kv_index])
                diag_m[ab] = complex(arr[m_idx, kv_index])
    d = np.concatenate(dl)
    vi = {ab: np.concatenate(vi[ab]) for ab in SPIN_PAIRS}
    vm = {ab: np.concatenate(vm[ab]) for ab in SPIN_PAIRS}
    return k_tensor(vi, vm, d, e, diag_i, diag_m)


def k_tensor(vi: dict, vm: dict, d: np.ndarray, e_spin: float,
             diag_i: dict | None = None, diag_m: dict | None = None) -> dict:
    """K_{alpha beta, gamma delta} from flattened per-channel elements.

    Implements the channel-resolved symmetric second-order combinations;
    diag_i/diag_m are the degenerate-manifold diagonal elements feeding the
    1/E_spin corrections of the energy-off-diagonal entries.
    """
    diag_i = diag_i or {ab: 0.0 for ab in SPIN_PAIRS}
    diag_m = diag_m or {ab: 0.0 for ab in SPIN_PAIRS}
    inv_d = 1.0 / d
    inv_me = 1.0 / (d - e_spin)
    inv_pe = 1.0 / (d + e_spin)

    def s(x):
        return complex(x.sum())

    k = {}
    k[("uu", "uu")] = -s((np.abs(vi["uu"] + vm["uu"]) ** 2) * inv_d
                         + (np.abs(vi["ud"]) ** 2 + np.abs(vm["ud"]) ** 2) * inv_me)
    k[("dd", "dd")] = -s((np.abs(vi["dd"] + vm["dd"]) ** 2) * inv_d
                         + (np.abs(vi["du"]) ** 2 + np.abs(vm["du"]) ** 2) * inv_pe)
    k[("ud", "ud")] = -s((np.abs(vi["uu"] + vm["dd"]) ** 2) * inv_d
                         + np.abs(vi["ud"]) ** 2 * inv_me
                         + np.abs(vm["du"]) ** 2 * inv_pe)
    k[("du", "du")] = -s((np.abs(vi["dd"] + vm["uu"]) ** 2) * inv_d
                         + np.abs(vm["ud"]) ** 2 * inv_me
                         + np.abs(vi["du"]) ** 2 * inv_pe)
    k[("ud", "du")] = -s(vi["ud"] * np.conj(vm["ud"]) * inv_me
                         + vm["du"] * np.conj(vi["du"]) * inv_pe)
    k[("uu", "dd")] = -s((vi["ud"] * np.conj(vm["du"])
                          + vm["ud"] * np.conj(vi["du"]))
                         * 0.5 * (inv_me + inv_pe))
    k[("uu", "ud")] = (-s(0.5 * (vi["uu"] + vm["uu"]) * np.conj(vm["du"])
                          * (inv_d + inv_pe)
                          + 0.5 * vm["ud"] * np.conj(vi["uu"] + vm["dd"])
                          * (inv_d + inv_me))
                       + (-diag_m["ud"] * np.conj(diag_i["uu"] + diag_m["dd"])
                          + (diag_i["uu"] + diag_m["uu"]) * np.conj(diag_m["du"]))
                       / e_spin)
    k[("uu", "du")] = (-s(0.5 * (vi["dd"] + vm["dd"]) * np.conj(vi["ud"])
                          * (inv_d + inv_me)
                          + 0.5 * vi["du"] * np.conj(vi["uu"] + vm["dd"])
                          * (inv_d + inv_pe))
                       + (diag_i["du"] * np.conj(diag_i["uu"] + diag_m["dd"])
                          - (diag_i["dd"] + diag_m["dd"]) * np.conj(diag_i["ud"]))
                       / e_spin)
    # energy-mirrored partners of the two entries above
    k[("dd", "ud")] = (-s(0.5 * (vi["dd"] + vm["dd"]) * np.conj(vi["ud"])
                          * (inv_d + inv_me)
                          + 0.5 * vi["du"] * np.conj(vi["uu"] + vm["dd"])
                          * (inv_d + inv_pe))
                       + (diag_i["du"] * np.conj(diag_i["uu"] + diag_m["dd"])
                          - (diag_i["dd"] + diag_m["dd"]) * np.conj(diag_i["ud"]))
                       / e_spin)
    k[("dd", "du")] = (-s(0.5 * (vi["dd"] + vm["dd"]) * np.conj(vm["ud"])
                          * (inv_d + inv_me)
                          + 0.5 * vm["du"] * np.conj(vi["dd"] + vm["uu"])
                          * (inv_d + inv_pe))
                       + (diag_m["du"] * np.conj(diag_i["dd"] + diag_m["uu"])
                          - (diag_i["dd"] + diag_m["dd"]) * np.conj(diag_m["ud"]))
                       / e_spin)
    pairs = list(k.keys())
    for (a, b) in pairs:
        k[(b, a)] = np.conj(k[(a, b)])
    return k


def j_from_k(k: dict) -> dict:
    """Interaction coefficients as linear combinations of the K tensor."""
    out = {
        "j_zz": k[("uu", "uu")] + k[("dd", "dd")]
        - k[("du", "du")] - k[("ud", "ud")],
        "j_pm": k[("ud", "du")],
        "j_zp": k[("uu", "ud")] - np.conj(k[("dd", "du")]),
        "j_pp": k[("uu", "dd")],
        "b_z": k[("uu", "uu")] - k[("dd", "dd")]
        + k[("ud", "ud")] - k[("du", "du")],
        "b_p": k[("uu", "du")] + np.conj(k[("dd", "ud")]),
        "b_0": (k[("uu", "uu")] + k[("dd", "dd")]
                + k[("ud", "ud")] + k[("du", "du")]) / 4.0,
    }
    return out


def nonresonant_report(setup: Setup, ws: ElementWorkspace, k0_pair,
                       i_idx: int, m_idx: int) -> dict:
    """Magnitudes of the rotating-wave-dropped families relative to J_perp."""
    j = j_from_k(k_coefficients(setup, ws, k0_pair, i_idx, m_idx))
    j_perp = 2.0 * abs(j["j_pm"])
    scale = j_perp if j_perp > 0 else 1.0
    return {
        "j_perp_hz": j_perp,
        "abs_j_zp_over_j_perp": abs(j["j_zp"]) / scale,
        "abs_j_pp_over_j_perp": abs(j["j_pp"]) / scale,
        "abs_b_p_over_j_perp": abs(j["b_p"]) / scale,
    }
