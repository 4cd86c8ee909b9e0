"""Rydberg radial wavefunctions and their moment integrals.

R_nl(r) is obtained by inward Numerov integration of the Coulomb radial
equation at the quantum-defect energy E = -1/(2 n*^2), on a log-spaced grid.
With x = ln r and X(x) = u(r)/sqrt(r), u = r R, the equation becomes
X'' = g X with g = (l + 1/2)^2 - 2 e^x - 2 E e^{2x}, which Numerov handles
with O(h^4) global accuracy on the uniform x grid.

The inner cutoff r_core = n*^(2/3) (wavefunction zero below) is the usual
quantum-defect prescription for alkali cores; for defect-free channels
(hydrogen) the Coulomb form is exact to the origin and a small fixed cutoff
is used instead so that low-n states keep their full norm.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.interpolate import CubicSpline

from .species import QuantumDefectTable, RydbergLevel, effective_n

_HYDROGENIC_CORE_AU = 1.0e-3


class RadialError(RuntimeError):
    pass


@dataclass
class RadialSolution:
    """Sampled radial wavefunction for one (n, l, j) level.

    r is log-spaced between r_core and the outer grid edge; R = u/r is
    normalized so that integral of R^2 r^2 dr equals 1.
    """

    level: RydbergLevel
    nstar: float
    energy_au: float
    r: np.ndarray
    u: np.ndarray            # u = r R
    r_core: float
    n_nodes: int
    grid_span: float
    n_points: int

    @property
    def R(self) -> np.ndarray:
        return self.u / self.r

    @property
    def x(self) -> np.ndarray:
        return np.log(self.r)

    def key(self) -> str:
        return (f"{self.level.n},{self.level.l},{self.level.j}:"
                f"{self.nstar!r}:{self.r_core!r}:{self.grid_span!r}:"
                f"{self.n_points}")


def default_r_core(nstar: float, hydrogenic: bool) -> float:
    return _HYDROGENIC_CORE_AU if hydrogenic else nstar ** (2.0 / 3.0)


def radial_wavefunction(level: RydbergLevel, defects: QuantumDefectTable,
                        n_points: int = 20001, r_core: float | None = None,
                        grid_span: float = 2.5) -> RadialSolution:
    """Inward-Numerov solution at the quantum-defect energy, normalized."""
    mu = defects.defect(level.l, level.j, level.n)
    nstar = effective_n(level, defects)
    energy = -0.5 / nstar ** 2
    if r_core is None:
        r_core = default_r_core(nstar, hydrogenic=(mu == 0.0))
    r_out = grid_span * nstar * (nstar + 15.0)
    if r_out <= r_core:
        raise RadialError(f"grid exhausted: r_out={r_out} <= r_core={r_core}")
    x = np.linspace(math.log(r_core), math.log(r_out), n_points)
    h = x[1] - x[0]
    r = np.exp(x)
    g = (level.l + 0.5) ** 2 - 2.0 * r - 2.0 * energy * r * r

    X = np.empty(n_points)
    X[-1] = 1e-15
    decay = math.exp(h * math.sqrt(max(g[-1], 0.0)))
    X[-2] = X[-1] * max(decay, 1.0 + h)
    f = 1.0 - (h * h / 12.0) * g
    for i in range(n_points - 3, -1, -1):
        X[i] = ((12.0 - 10.0 * f[i + 1]) * X[i + 1] - f[i + 2] * X[i + 2]) / f[i]
        if abs(X[i]) > 1e200:
            X[i:] *= 1e-150  # rescale to keep headroom; norm fixed later
    u = X * np.sqrt(r)
    norm2 = simpson(u * u * r, x=x)
    if not np.isfinite(norm2) or norm2 <= 0:
        raise RadialError(f"normalization failed for {level}")
    u /= math.sqrt(norm2)

    sign = np.sign(u[np.abs(u) > 1e-9 * np.abs(u).max()])
    n_nodes = int(np.count_nonzero(np.diff(sign) != 0))
    # conventional overall sign: positive near the outer turning point
    peak = np.argmax(np.abs(u))
    if u[peak] < 0:
        u = -u
    return RadialSolution(level, nstar, energy, r, u, r_core, n_nodes,
                          grid_span, n_points)


# ---------------------------------------------------------------------------
# Moment integrals
# ---------------------------------------------------------------------------

def _ordered(a: RadialSolution, b: RadialSolution):
    """Deterministic pair order so (a, b) and (b, a) run identical arithmetic."""
    ka = (a.level.n, a.level.l, a.level.j)
    kb = (b.level.n, b.level.l, b.level.j)
    return (a, b) if ka <= kb else (b, a)


def _common_grid(a: RadialSolution, b: RadialSolution):
    """Log grid on the overlap of the two solutions, densest spacing wins."""
    lo = max(a.r[0], b.r[0])
    hi = min(a.r[-1], b.r[-1])
    if hi <= lo:
        raise RadialError("radial grids do not overlap")
    if a is b or (a.r.shape == b.r.shape and np.array_equal(a.r, b.r)):
        return a.x, a.r, a.u, b.u
    n = max(a.n_points, b.n_points)
    x = np.linspace(math.log(lo), math.log(hi), n)
    r = np.exp(x)
    ua = CubicSpline(a.x, a.u)(x)
    ub = CubicSpline(b.x, b.u)(x)
    return x, r, ua, ub


def moment_integral(a: RadialSolution, b: RadialSolution, power: int,
                    r_max: float = math.inf) -> float:
    """integral r^power R_a R_b dr over [r_core, r_max].

    power 3 with r_max = inf is the radial dipole; power 0 gives the
    overlap tail pieces; power 2 with a = b the containment integrand.
    Full-range values use composite Simpson; finite r_max goes through the
    cumulative table (trapezoid) with linear interpolation at the endpoint.
    """
    a, b = _ordered(a, b)
    x, r, ua, ub = _common_grid(a, b)
    integrand = ua * ub * r ** (power - 1)  # dr = r dx
    if math.isinf(r_max) or r_max >= r[-1]:
        return float(simpson(integrand, x=x))
    if r_max <= r[0]:
        return 0.0
    cum = cumulative_trapezoid(integrand, x=x, initial=0.0)
    return float(np.interp(math.log(r_max), x, cum))


def cumulative_moment(a: RadialSolution, b: RadialSolution, power: int):
    """(r, cumulative integral of r^power R_a R_b dr from r_core) arrays."""
    a, b = _ordered(a, b)
    x, r, ua, ub = _common_grid(a, b)
    integrand = ua * ub * r ** (power - 1)
    cum = cumulative_trapezoid(integrand, x=x, initial=0.0)
    return r, cum


def containment_fraction(sol: RadialSolution, r_max: float) -> float:
    """integral_0^{r_max} R^2 r^2 dr; computed as 1 minus the tail over the
    solution's own norm so values near 1 keep absolute accuracy ~1e-12."""
    if r_max >= sol.r[-1]:
        return 1.0
    if r_max <= sol.r[0]:
        return 0.0
    x = sol.x
    integrand = sol.u * sol.u * sol.r
    cum = cumulative_trapezoid(integrand, x=x, initial=0.0)
    total = cum[-1]
    head = float(np.interp(math.log(r_max), x, cum))
    return 1.0 - (total - head) / total


def radial_dipole_au(a: RadialSolution, b: RadialSolution) -> float:
    """Radial dipole integral r^3 R_a R_b dr over the full grid, in a.u."""
    return moment_integral(a, b, 3)


# ---------------------------------------------------------------------------
# Disk cache for moment integrals (they dominate geometry sweeps)
# ---------------------------------------------------------------------------

class RadialIntegralCache:
    """Append-only text cache: one 'sha256 float.hex()' record per line.

    Hits are bit-identical to the stored computation; the key hashes every
    generating parameter (levels, n*, grid layout, power, r_max).
    """

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._mem: dict[str, float] = {}
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                key, hexval = line.split()
                self._mem[key] = float.fromhex(hexval)

    @staticmethod
    def make_key(a: RadialSolution, b: RadialSolution, power: int,
                 r_max: float) -> str:
        a, b = _ordered(a, b)
        raw = f"{a.key()}|{b.key()}|p={power}|rmax={r_max!r}"
        return hashlib.sha256(raw.encode()).hexdigest()

    def __len__(self):
        return len(self._mem)

    def lookup(self, key: str):
        return self._mem.get(key)

    def store(self, key: str, value: float):
        self._mem[key] = value
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(f"{key} {float(value).hex()}\n")

    def clear(self):
        self._mem.clear()
        if self.path is not None and self.path.exists():
            self.path.unlink()


def cached_moment_integral(a: RadialSolution, b: RadialSolution, power: int,
                           r_max: float = math.inf,
                           cache: RadialIntegralCache | None = None) -> float:
    if cache is None:
        return moment_integral(a, b, power, r_max)
    key = cache.make_key(a, b, power, r_max)
    hit = cache.lookup(key)
    if hit is not None:
        return hit
    val = moment_integral(a, b, power, r_max)
    cache.store(key, val)
    return val
