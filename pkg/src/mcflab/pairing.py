"""Empirical MCF pairings: raw values I(j,R), limits, and the density lambda.

The raw pairing is

    I(j, R) = int h(x, u_j) . conj(T_{(1 - eta_R) Psi}[u_j]) dx

with the bilinear dot product over C^N and conjugation on the second slot.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Sequence

import numpy as np

from mcflab.field import Grid, SampledField
from mcflab.fourier import RAISED_COSINE, CutoffProfile, MultiplierSymbol, apply_multiplier
from mcflab.synth import SequenceGenerator
from mcflab.testfun import TestIntegrand

DEFAULT_J = (32, 64, 128, 256)
DEFAULT_R = (2.0, 4.0, 8.0, 16.0)
DEFAULT_TOL = 1e-2


class ConvergenceError(RuntimeError):
    """Raised when the tabulated pairings do not stabilize in j."""

    def __init__(self, message: str, table: dict):
        super().__init__(message)
        self.table = table


@lru_cache(maxsize=8)
def _points(grid: Grid) -> np.ndarray:
    pts = grid.points()
    pts.flags.writeable = False
    return pts


def _x_dependent(f: TestIntegrand) -> bool:
    return any(pt.phi is not None for pt in f.parts)


def _integrand_values(f: TestIntegrand, u: SampledField) -> np.ndarray:
    x = _points(u.grid) if _x_dependent(f) else None
    return f.evaluate(x, u.flat())


def _check_dims(f: TestIntegrand, symbol: MultiplierSymbol, u: SampledField):
    if f.N != u.N:
        raise ValueError(f"integrand acts on C^{f.N}, field has N={u.N}")
    if not symbol.is_scalar and symbol.shape != (u.N, u.N):
        raise ValueError(f"symbol of shape {symbol.shape} does not act on C^{u.N}")


def _holder(hv: np.ndarray, tv: np.ndarray, p: float, cellvol: float) -> float:
    q = p / (p - 1)
    a = (np.sum(np.linalg.norm(hv, axis=1) ** q) * cellvol) ** (1 / q)
    b = (np.sum(np.linalg.norm(tv, axis=1) ** p) * cellvol) ** (1 / p)
    return float(a * b)


def _pair(hv: np.ndarray, tv: np.ndarray, cellvol: float) -> complex:
    return complex(np.sum(hv * tv.conj()) * cellvol)


def _weighted(u: SampledField, inner) -> SampledField:
    if inner is None:
        return u
    w = np.conj(np.asarray(inner(_points(u.grid)))).reshape(u.grid.shape)
    return SampledField(u.grid, w[..., None] * u.values)


def pairing_raw(f: TestIntegrand, symbol: MultiplierSymbol, u: SampledField, R: float,
                eta: CutoffProfile = RAISED_COSINE, with_bound: bool = False, inner=None):
    """I(j,R) for one sampled member u = u_j.

    ``inner`` is a spatial weight phi moved into the multiplier argument,
    giving int h(u_j) . conj(T[conj(phi) u_j]).
    """
    _check_dims(f, symbol, u)
    if R >= u.grid.nyquist / 2:
        raise ValueError(f"R={R} must be below Nyquist/2={u.grid.nyquist / 2}")
    tv = apply_multiplier(symbol, _weighted(u, inner), "highpass", R, eta).flat()
    hv = _integrand_values(f, u)
    val = _pair(hv, tv, u.grid.cell_volume)
    if with_bound:
        return val, _holder(hv, tv, f.p, u.grid.cell_volume)
    return val


def pairing_shortcut_raw(f: TestIntegrand, symbol: MultiplierSymbol, u: SampledField,
                         limit: SampledField) -> complex:
    """int h(x, u_j) . conj(T_Psi[u_j - u]) dx, the eliminate-R form."""
    _check_dims(f, symbol, u)
    tv = apply_multiplier(symbol, u - limit, "full").flat()
    return _pair(_integrand_values(f, u), tv, u.grid.cell_volume)


@dataclass
class EmpiricalPairing:
    """Table of raw pairings plus the extrapolated value and diagnostics.

    ``spread`` is the maximal deviation of the largest-j row across R (shortcut
    mode: across the averaged j values); ``j_diff`` is the largest difference
    between the two largest j.
    """

    table: dict
    value: complex
    spread: float
    j_diff: float
    mode: str
    j_list: tuple
    R_list: tuple
    tol: float
    converged: bool
    holder_ratio: float = 0.0
    params: dict = dc_field(default_factory=dict)

    @property
    def uncertainty(self) -> float:
        """spread + j_diff, the combined extrapolation uncertainty."""
        return self.spread + self.j_diff

    def rows(self):
        for (j, R), v in sorted(self.table.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            yield j, R, v

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "R", "re", "im"])
            for j, R, v in self.rows():
                w.writerow([j, format(R, ".17g"), format(v.real, ".17g"), format(v.imag, ".17g")])

    def summary(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "spread": self.spread,
            "j_diff": self.j_diff,
            "mode": self.mode,
            "converged": self.converged,
            "tol": self.tol,
            "j_list": list(self.j_list),
            "R_list": [float(r) for r in self.R_list],
            "holder_ratio": self.holder_ratio,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=str)


def agree(a: EmpiricalPairing, b: EmpiricalPairing, floor: float = 1e-9) -> bool:
    """Values agree within twice the combined uncertainty (plus a roundoff floor)."""
    return abs(a.value - b.value) <= 2 * (a.uncertainty + b.uncertainty) + floor


def check_limits(gen: SequenceGenerator, grid: Grid, j_list, R_list, mode: str):
    """Precondition checks on the (j, R) lists against the grid and generator."""
    j_list = tuple(int(j) for j in j_list)
    if list(j_list) != sorted(set(j_list)) or len(j_list) < 2:
        raise ValueError("j_list must be strictly increasing with at least two entries")
    for j in j_list:
        fr = gen.max_frequency(j)
        if fr is not None and fr > grid.nyquist / 4:
            raise ValueError(f"j={j}: active frequency {fr} exceeds Nyquist/4={grid.nyquist / 4}")
    if mode == "double-limit":
        R_list = tuple(float(r) for r in R_list)
        if not R_list or list(R_list) != sorted(set(R_list)):
            raise ValueError("R_list must be strictly increasing and nonempty")
        if R_list[0] <= 1:
            raise ValueError("cutoff radii must exceed 1")
        if R_list[-1] >= grid.nyquist / 2:
            raise ValueError("cutoff exceeds grid resolution")
        lo = gen.min_frequency(j_list[0])
        if lo is not None and 2 * R_list[-1] > lo + 1e-12:
            raise ValueError(f"max R={R_list[-1]} exceeds half the lowest active frequency {lo}")
    elif mode != "shortcut":
        raise ValueError(f"unknown limit mode {mode!r}")
    return j_list, tuple(R_list)


def pairing_limit(f: TestIntegrand, symbol: MultiplierSymbol, gen: SequenceGenerator,
                  grid: Grid, j_list: Sequence[int] = DEFAULT_J,
                  R_list: Sequence[float] = DEFAULT_R, mode: str = "double-limit",
                  eta: CutoffProfile = RAISED_COSINE, tol: float = DEFAULT_TOL,
                  fields: dict | None = None, inner=None) -> EmpiricalPairing:
    """Extrapolated pairing <<f (x) conj(Psi), omega>> for the sequence ``gen``.

    ``fields`` may hold pre-emitted u_j keyed by j to avoid re-sampling.
    ``inner`` is passed through to pairing_raw (double-limit mode only).
    """
    if inner is not None and mode != "double-limit":
        raise ValueError("a moved spatial weight needs the double-limit mode")
    j_list, R_list = check_limits(gen, grid, j_list, R_list, mode)
    emitted = fields if fields is not None else {}
    get = lambda j: emitted[j] if j in emitted else gen.emit(j, grid)
    table: dict = {}
    ratio = 0.0
    jmax, jprev = j_list[-1], j_list[-2]
    params = {"n": grid.n, "d": grid.d, "eta": eta.name, "generator": gen.descriptor(),
              "integrand": f.name, "symbol": symbol.name}
    if mode == "double-limit":
        for j in j_list:
            u = get(j)
            for R in R_list:
                val, bound = pairing_raw(f, symbol, u, R, eta, with_bound=True, inner=inner)
                if abs(val) > bound * (1 + 1e-9) + 1e-300:
                    raise AssertionError(f"Hoelder bound violated at j={j}, R={R}")
                ratio = max(ratio, abs(val) / bound if bound > 0 else 0.0)
                table[(j, R)] = val
        j_diff = max(abs(table[(jmax, R)] - table[(jprev, R)]) for R in R_list)
        top = R_list[len(R_list) // 2:] if len(R_list) > 1 else R_list
        value = complex(np.mean([table[(jmax, R)] for R in top]))
        spread = max(abs(table[(jmax, R)] - value) for R in R_list)
    else:
        limit = gen.weak_limit(grid)
        for j in j_list:
            table[(j, float("inf"))] = pairing_shortcut_raw(f, symbol, get(j), limit)
        vals = [table[(jprev, float("inf"))], table[(jmax, float("inf"))]]
        j_diff = abs(vals[1] - vals[0])
        value = complex(np.mean(vals))
        spread = max(abs(v - value) for v in vals)
    if j_diff > 10 * tol:
        raise ConvergenceError(
            f"pairing did not stabilize in j: largest-j difference {j_diff:.3e} > 10*tol", table)
    return EmpiricalPairing(table, value, float(spread), float(j_diff), mode, j_list,
                            R_list if mode == "double-limit" else (), tol, j_diff <= tol,
                            ratio, params)


@dataclass
class SpatialDensity:
    """Coarse-binned nonnegative density; bin b is centered at b/B per axis."""

    grid: Grid
    values: np.ndarray
    masses: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def bin_of(self, x) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return tuple(int(np.floor(np.mod(t * self.grid.n + 0.5, self.grid.n))) for t in x)

    def to_csv(self, path) -> None:
        B = self.grid.n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{a + 1}" for a in range(self.grid.d)] + ["density", "mass"])
            for idx in np.ndindex(self.values.shape):
                w.writerow([format(i / B, ".17g") for i in idx]
                           + [format(self.values[idx], ".17g"), format(self.masses[idx], ".17g")])


def _bin_masses(u: SampledField, p: float, bins: int) -> np.ndarray:
    g = u.grid
    if g.n % bins:
        raise ValueError("bins must divide the grid size")
    dens = np.linalg.norm(u.values, axis=-1) ** p * g.cell_volume
    s = g.n // (2 * bins)
    dens = np.roll(dens, s, axis=tuple(range(g.d)))
    shape = []
    for _ in range(g.d):
        shape += [bins, g.n // bins]
    dens = dens.reshape(shape)
    return dens.sum(axis=tuple(range(1, 2 * g.d, 2)))


def lambda_omega(gen: SequenceGenerator, grid: Grid, p: float | None = None,
                 j_list: Sequence[int] = DEFAULT_J, bins: int = 16,
                 tol: float = 0.02) -> SpatialDensity:
    """|u_j|^p binned on a coarse grid at the largest j, checked against the next j."""
    p = gen.p if p is None else p
    j_list = tuple(j_list)
    m1 = _bin_masses(gen.emit(j_list[-1], grid), p, bins)
    m0 = _bin_masses(gen.emit(j_list[-2], grid), p, bins)
    total = m1.sum()
    if np.abs(m1 - m0).max() > tol * max(total, 1e-300):
        raise ConvergenceError("binned density unstable across the top two j",
                               {"masses_jmax": m1.tolist(), "masses_jprev": m0.tolist()})
    coarse = Grid(grid.d, bins)
    return SpatialDensity(coarse, m1 / coarse.cell_volume, m1)
