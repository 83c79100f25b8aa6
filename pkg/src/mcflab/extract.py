"""Young measures, H-measures, equiintegrability and wavefront indicators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from mcflab.field import Grid, SampledField, dft, integrate, sample_field
from mcflab.fourier import MultiplierSymbol, cone_cutoff, identity as identity_symbol, lattice_directions
from mcflab.pairing import (
    DEFAULT_J,
    DEFAULT_R,
    DEFAULT_TOL,
    ConvergenceError,
    EmpiricalPairing,
    pairing_limit,
)
from mcflab.synth import SequenceGenerator, value_histogram
from mcflab.testfun import TestIntegrand, truncation, window

MAX_ATOMS = 16


@dataclass
class AtomicYoungMeasure:
    atoms: list  # [(z, mass)]

    def __post_init__(self):
        self.atoms = [(np.atleast_1d(np.asarray(z, dtype=complex)), float(m)) for z, m in self.atoms]

    @property
    def total(self) -> float:
        return sum(m for _, m in self.atoms)

    def mass_at(self, z, tol: float = 1e-6) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return sum(m for loc, m in self.atoms if np.linalg.norm(loc - z) <= tol)

    def check(self, tol: float = 1e-6) -> "AtomicYoungMeasure":
        if abs(self.total - 1.0) > tol:
            raise ValueError(f"Young measure masses sum to {self.total}")
        return self


def _bump(r: np.ndarray, width: float) -> np.ndarray:
    return np.clip(1.0 - r / width, 0.0, None)


def _rho(r: np.ndarray, eps: float) -> np.ndarray:
    """1 on [0, eps], linear down to 0 at 2 eps."""
    return np.clip(2.0 - r / eps, 0.0, 1.0)


def young_measure(gen: SequenceGenerator, grid: Grid, mode: str = "histogram",
                  j_list: Sequence[int] = DEFAULT_J, eps: float = 0.1,
                  locations: Sequence | None = None, R_list: Sequence[float] = DEFAULT_R,
                  limit_mode: str = "double-limit", tol: float = DEFAULT_TOL) -> AtomicYoungMeasure:
    """Atomic Young measure of ``gen``.

    histogram: value clusters of u_j at the largest j.
    from-mcf: for each candidate atom z_m the bump F_m (radius half the atom
    gap) is tested through

        <F, nu> = int F(u) - <<g_eps (x) I, omega>> + <<f_eps (x) I, omega>> + O(eps),

    and the masses solve sum_i F_m(z_i) mass_i = <F_m, nu>.
    """
    if mode == "histogram":
        atoms = value_histogram(gen.emit(max(j_list), grid))
        if len(atoms) > MAX_ATOMS:
            raise ValueError("not atomically clusterable")
        return AtomicYoungMeasure(atoms).check()
    if mode != "from-mcf":
        raise ValueError(f"unknown Young measure mode {mode!r}")
    if locations is None:
        atoms = gen.young_atoms()
        if atoms is None:
            raise ValueError("from-mcf mode needs atom locations")
        locations = [z for z, _ in atoms]
    locs = [np.atleast_1d(np.asarray(z, dtype=complex)) for z in locations]
    u = np.atleast_1d(gen.mean())
    gap = min((np.linalg.norm(a - b) for i, a in enumerate(locs) for b in locs[i + 1:]), default=1.0)
    dist_u = min(np.linalg.norm(z - u) for z in locs)
    if not 0 < eps < gap / 4:
        raise ValueError(f"eps={eps} must lie in (0, atom gap/4 = {gap / 4})")
    width = gap / 2
    N, p = gen.N, gen.p
    rhs = np.zeros(len(locs))
    B = np.zeros((len(locs), len(locs)))
    for m, zm in enumerate(locs):
        F = lambda z, zm=zm: _bump(np.linalg.norm(z - zm, axis=-1), width)
        Fu = float(F(u[None, :])[0])

        def h_eps(z, F=F):
            d = z - u
            r = np.linalg.norm(d, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                c = np.where(r > 0, (1 - _rho(r, eps)) * F(z) / r**2, 0.0)
            return c[:, None] * d

        def k_eps(z, Fu=Fu):
            d = z - u
            r = np.linalg.norm(d, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                c = np.where(r > 0, (1 - _rho(r, eps)) * Fu / r**2, 0.0)
            return c[:, None] * d

        zero = lambda e: np.zeros_like(e)
        f_eps = TestIntegrand.make(h_eps, p, N, recession=zero, name="f_eps")
        g_eps = TestIntegrand.make(k_eps, p, N, recession=zero, name="g_eps")
        Ipart = lambda f: pairing_limit(f, identity_symbol(), gen, grid, j_list, R_list,
                                        limit_mode, tol=tol).value
        rhs[m] = (Fu - Ipart(g_eps) + Ipart(f_eps)).real
        B[m] = [F(z[None, :])[0] for z in locs]
    masses = np.linalg.lstsq(B, rhs, rcond=None)[0]
    return AtomicYoungMeasure(list(zip(locs, masses)))


@dataclass
class LimitValue:
    value: complex
    spread: float
    table: dict

    @property
    def uncertainty(self) -> float:
        return self.spread


def hmeasure_pair(phi1: Callable, phi2: Callable, psi: MultiplierSymbol, gen: SequenceGenerator,
                  grid: Grid, j_list: Sequence[int] = DEFAULT_J, k: int = 0, l: int = 0) -> LimitValue:
    """lim sum_xi F[phi1 v^k](xi) conj(psi(xi/|xi|) F[phi2 v^l](xi)), v = u_j - u."""
    if gen.p != 2:
        raise ValueError("H-measures are defined for p = 2")
    if not psi.is_scalar:
        raise ValueError("H-measure pairing takes a scalar symbol")
    unit, r = lattice_directions(grid)
    nz = r > 0
    ps = psi.raw(unit[nz])
    x = grid.points()
    a1 = np.asarray(phi1(x)).reshape(grid.shape)
    a2 = np.asarray(phi2(x)).reshape(grid.shape)
    limit = gen.weak_limit(grid)
    table = {}
    for j in j_list:
        v = gen.emit(j, grid) - limit
        c1 = dft(SampledField(grid, a1 * v.values[..., k])).coeffs.reshape(-1)
        c2 = dft(SampledField(grid, a2 * v.values[..., l])).coeffs.reshape(-1)
        table[j] = complex(np.sum(c1[nz] * (ps * c2[nz]).conj()))
    top = [table[j] for j in list(j_list)[-2:]]
    val = complex(np.mean(top))
    return LimitValue(val, float(max(abs(t - val) for t in top)), table)


def hmeasure_integrand(phi1: Callable, phi2: Callable, N: int = 1, k: int = 0, l: int = 0
                       ) -> TestIntegrand:
    """f = phi1 conj(phi2) z^k q^l, the MCF counterpart of hmeasure_pair."""

    def h(z):
        out = np.zeros(z.shape, dtype=complex)
        out[:, l] = z[:, k]
        return out

    phi = lambda x: phi1(x) * np.conj(phi2(x))
    return TestIntegrand.make(h, 2.0, N, phi=phi, recession=h, name="hmeasure")


@dataclass
class EquiintIndicator:
    value: float
    stable: bool
    by_K: dict


def equiint_indicator(gen: SequenceGenerator, grid: Grid, K_list: Sequence[float],
                      j_list: Sequence[int] = DEFAULT_J, R_list: Sequence[float] = DEFAULT_R,
                      mode: str = "double-limit", tol: float = DEFAULT_TOL) -> EquiintIndicator:
    """<<f_K (x) I, omega>> with h_K(z) = g(|z|/K) |z|^{p-2} z, at the largest K."""
    K_list = list(K_list)
    if len(K_list) < 2 or K_list != sorted(K_list):
        raise ValueError("K_list must be increasing with at least two entries")
    by_K = {}
    for K in K_list:
        f = truncation(K, gen.N, gen.p)
        by_K[K] = pairing_limit(f, identity_symbol(), gen, grid, j_list, R_list, mode, tol=tol).value.real
    diff = abs(by_K[K_list[-1]] - by_K[K_list[-2]])
    if diff > 10 * tol:
        raise ConvergenceError(f"truncated pairings unstable in K (difference {diff:.3e})", by_K)
    return EquiintIndicator(float(by_K[K_list[-1]]), diff <= tol, by_K)


# -- wavefront --------------------------------------------------------------------


@dataclass
class WavefrontSample:
    x0: np.ndarray
    z0: np.ndarray
    at_infinity: bool
    xi0: np.ndarray
    indicator: float
    pairing: EmpiricalPairing | None = dc_field(default=None, repr=False)

    @property
    def z_label(self) -> str:
        z = np.atleast_1d(self.z0)
        body = ";".join(format(float(c.real), ".6g") + ("" if c.imag == 0 else f"{c.imag:+.6g}i") for c in z)
        return ("inf:" if self.at_infinity else "") + body

    @property
    def angle(self) -> float:
        xi = np.atleast_1d(self.xi0)
        if xi.size == 1:
            return 0.0 if xi[0] > 0 else float(np.pi)
        return float(np.mod(np.arctan2(xi[1], xi[0]), 2 * np.pi))


def spatial_bump(x0, width: float) -> Callable:
    """cos^2 bump of radius ``width`` around x0 in the periodic distance."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def phi(x):
        dx = np.mod(np.atleast_2d(x) - x0 + 0.5, 1.0) - 0.5
        r = np.linalg.norm(dx, axis=1)
        return np.where(r < width, np.cos(0.5 * np.pi * r / width) ** 2, 0.0)

    return phi


def wavefront_indicator(gen: SequenceGenerator, grid: Grid, x0, z0, xi0,
                        widths: tuple[float, float, float], at_infinity: bool = False,
                        vector=None, j_list: Sequence[int] = DEFAULT_J,
                        R_list: Sequence[float] = DEFAULT_R, mode: str = "double-limit",
                        tol: float = DEFAULT_TOL) -> WavefrontSample:
    xw, zw, half_angle = widths
    if min(widths) <= 0:
        raise ValueError("widths must be positive")
    f = window(z0, zw, gen.p, gen.N, vector, at_infinity).with_phi(spatial_bump(x0, xw))
    psi = cone_cutoff(xi0, half_angle)
    pr = pairing_limit(f, psi, gen, grid, j_list, R_list, mode, tol=tol)
    return WavefrontSample(np.atleast_1d(np.asarray(x0, float)), np.atleast_1d(np.asarray(z0, complex)),
                           at_infinity, np.atleast_1d(np.asarray(xi0, float)), abs(pr.value), pr)


def wavefront_scan(gen: SequenceGenerator, grid: Grid, x0s, z0s, directions, widths,
                   **limit) -> list[WavefrontSample]:
    """Indicators over all (x0, z0, xi0); z0s holds (z0, at_infinity) pairs."""
    out = []
    for x0 in x0s:
        for z0, inf in z0s:
            for xi in directions:
                out.append(wavefront_indicator(gen, grid, x0, z0, xi, widths, inf, **limit))
    return out


def threshold_set(samples: list[WavefrontSample], level: float = 0.1) -> list[WavefrontSample]:
    top = max((s.indicator for s in samples), default=0.0)
    return [s for s in samples if top > 0 and s.indicator >= level * top]


def cone_mass_fraction(samples: list[WavefrontSample], centers, half_angle: float) -> float:
    """Share of total indicator mass at directions within ``half_angle`` of a center."""
    total = sum(s.indicator for s in samples)
    if total == 0:
        return 0.0
    centers = [np.atleast_1d(np.asarray(c, float)) / np.linalg.norm(c) for c in centers]
    inside = 0.0
    for s in samples:
        xi = s.xi0 / np.linalg.norm(s.xi0)
        if any(np.arccos(np.clip(xi @ c, -1, 1)) <= half_angle + 1e-12 for c in centers):
            inside += s.indicator
    return inside / total


def write_scan_csv(samples: list[WavefrontSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x0", "z", "xi_angle", "indicator"])
        for s in samples:
            w.writerow([";".join(format(t, ".17g") for t in s.x0), s.z_label,
                        format(s.angle, ".17g"), format(s.indicator, ".17g")])
