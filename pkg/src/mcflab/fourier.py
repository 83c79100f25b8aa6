"""Fourier multipliers with 0-homogeneous symbols and radial cutoffs.

A symbol is evaluated only on unit vectors k/|k| of the integer frequency
lattice, so positive 0-homogeneity holds by construction.  In d=1 the sphere
is {-1, +1} and a symbol is just a pair of matrices.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable

import numpy as np

from mcflab.field import Grid, SampledField, SpectralField, dft

_CHUNK = 1 << 16
_CACHE_LIMIT = 1 << 22  # complex entries kept per cached symbol lattice
_symbol_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


@dataclass(frozen=True)
class CutoffProfile:
    """Radial profile eta with eta=1 on [0,1] and eta=0 on [2, inf)."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t) -> np.ndarray:
        return self.fn(np.asarray(t, dtype=float))

    def scaled(self, R: float, radius: np.ndarray) -> np.ndarray:
        """eta_R evaluated at frequency magnitudes ``radius``."""
        return self(radius / R)


def _raised_cosine(t):
    s = np.clip(t - 1.0, 0.0, 1.0)
    return np.where(s < 1.0, np.cos(0.5 * np.pi * s) ** 2, 0.0)


def _smooth_step(t):
    # C-infinity transition built from exp(-1/x)
    s = np.clip(t - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return b / (a + b)


RAISED_COSINE = CutoffProfile("raised-cosine", _raised_cosine)
SMOOTH_STEP = CutoffProfile("smooth-step", _smooth_step)
PROFILES = {p.name: p for p in (RAISED_COSINE, SMOOTH_STEP)}


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """Symbol on the unit sphere.

    ``fn`` maps unit vectors of shape ``(M, d)`` to ``(M,)`` for scalar symbols
    (embedded as psi * Identity) or ``(M, n_out, n_in)`` for matrix symbols.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    shape: tuple[int, int] | None = None
    name: str = "symbol"
    smoothness: int = 2
    params: dict = dc_field(default_factory=dict)

    @property
    def is_scalar(self) -> bool:
        return self.shape is None

    @property
    def N(self) -> int | None:
        return None if self.shape is None else self.shape[1]

    def raw(self, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        out = np.asarray(self.fn(xi), dtype=complex)
        if self.is_scalar:
            return out.reshape(xi.shape[0])
        return out.reshape((xi.shape[0],) + self.shape)

    def matrices(self, xi, N: int | None = None) -> np.ndarray:
        """Symbol values as ``(M, n_out, n_in)`` matrices."""
        v = self.raw(xi)
        if not self.is_scalar:
            return v
        if N is None:
            raise ValueError("scalar symbol needs N to form matrices")
        return v[:, None, None] * np.eye(N)

    def scale(self, alpha) -> "MultiplierSymbol":
        alpha = complex(alpha)
        return MultiplierSymbol(lambda xi: alpha * self.raw(xi), self.shape,
                                f"{alpha}*{self.name}", self.smoothness)

    def adjoint(self) -> "MultiplierSymbol":
        if self.is_scalar:
            return MultiplierSymbol(lambda xi: self.raw(xi).conj(), None,
                                    f"{self.name}*", self.smoothness)
        shp = (self.shape[1], self.shape[0])
        return MultiplierSymbol(lambda xi: np.swapaxes(self.raw(xi), 1, 2).conj(), shp,
                                f"{self.name}*", self.smoothness)

    def compose(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        """Pointwise product self(xi) @ other(xi)."""
        if self.is_scalar and other.is_scalar:
            return MultiplierSymbol(lambda xi: self.raw(xi) * other.raw(xi), None,
                                    f"{self.name}.{other.name}",
                                    min(self.smoothness, other.smoothness))
        if self.is_scalar:
            shp = other.shape
            fn = lambda xi: self.raw(xi)[:, None, None] * other.raw(xi)
        elif other.is_scalar:
            shp = self.shape
            fn = lambda xi: self.raw(xi) * other.raw(xi)[:, None, None]
        else:
            if self.shape[1] != other.shape[0]:
                raise ValueError(f"cannot compose {self.shape} with {other.shape}")
            shp = (self.shape[0], other.shape[1])
            fn = lambda xi: self.raw(xi) @ other.raw(xi)
        return MultiplierSymbol(fn, shp, f"{self.name}.{other.name}",
                                min(self.smoothness, other.smoothness))


# -- built-in symbols ----------------------------------------------------------


def identity() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: np.ones(xi.shape[0]), None, "identity", 99)


def constant_matrix(M) -> MultiplierSymbol:
    M = np.asarray(M, dtype=complex)
    return MultiplierSymbol(lambda xi: np.broadcast_to(M, (xi.shape[0],) + M.shape),
                            M.shape, "constant", 99)


def half_space(xi0, width: float = 0.0) -> MultiplierSymbol:
    """Indicator of {xi . xi0 > 0}; with width > 0 a raised-cosine ramp in xi . xi0."""
    xi0 = np.asarray(xi0, dtype=float)
    xi0 = xi0 / np.linalg.norm(xi0)

    def fn(xi):
        s = xi @ xi0
        if width <= 0:
            return np.where(s > 0, 1.0, np.where(s < 0, 0.0, 0.5))
        t = np.clip((s + width) / (2 * width), 0.0, 1.0)
        return np.sin(0.5 * np.pi * t) ** 2

    return MultiplierSymbol(fn, None, "half-space", 2 if width > 0 else 0,
                            {"xi0": xi0.tolist(), "width": width})


def cone_cutoff(xi0, half_angle: float) -> MultiplierSymbol:
    """Smooth bump cos^2(pi a / (2 h)) in the angle a to xi0, zero for a >= h."""
    xi0 = np.asarray(xi0, dtype=float)
    xi0 = xi0 / np.linalg.norm(xi0)

    def fn(xi):
        a = np.arccos(np.clip(xi @ xi0, -1.0, 1.0))
        return np.where(a < half_angle, np.cos(0.5 * np.pi * a / half_angle) ** 2, 0.0)

    return MultiplierSymbol(fn, None, "cone-cutoff", 1,
                            {"xi0": xi0.tolist(), "half_angle": half_angle})


def two_point(plus, minus) -> MultiplierSymbol:
    """d=1 symbol given by its values at +1 and -1 (scalars or matrices)."""
    plus = np.asarray(plus, dtype=complex)
    minus = np.asarray(minus, dtype=complex)
    shape = None if plus.ndim == 0 else plus.shape

    def fn(xi):
        s = xi[:, 0] > 0
        if shape is None:
            return np.where(s, plus, minus)
        return np.where(s[:, None, None], plus, minus)

    return MultiplierSymbol(fn, shape, "two-point", 99)


# -- application ---------------------------------------------------------------


@lru_cache(maxsize=8)
def _lattice(grid: Grid):
    k = grid.frequencies()
    r = np.linalg.norm(k, axis=-1)
    unit = k / np.where(r > 0, r, 1.0)[:, None]
    unit[r == 0] = 0.0
    unit[r == 0, 0] = 1.0
    unit.flags.writeable = False
    r.flags.writeable = False
    return unit, r


def lattice_directions(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and magnitudes of the lattice frequencies (FFT order)."""
    return _lattice(grid)


def _lattice_values(symbol: MultiplierSymbol, grid: Grid) -> np.ndarray | None:
    """Symbol values on all lattice directions, cached per symbol when small enough."""
    per = 1 if symbol.is_scalar else symbol.shape[0] * symbol.shape[1]
    if grid.size * per > _CACHE_LIMIT:
        return None
    by_grid = _symbol_cache.setdefault(symbol, {})
    if grid not in by_grid:
        unit, _ = _lattice(grid)
        vals = np.concatenate([symbol.raw(unit[s : s + _CHUNK])
                               for s in range(0, unit.shape[0], _CHUNK)])
        vals.flags.writeable = False
        by_grid.clear()
        by_grid[grid] = vals
    return by_grid[grid]


def _radial_weight(grid: Grid, mode: str, R, eta: CutoffProfile) -> np.ndarray:
    _, r = _lattice(grid)
    if mode == "full":
        w = np.ones_like(r)
    elif mode == "highpass":
        if R is None or R >= grid.nyquist:
            raise ValueError("cutoff exceeds grid resolution")
        w = 1.0 - eta.scaled(R, r)
    elif mode == "bandlimit":
        if R is None:
            raise ValueError("bandlimit mode needs a radius R")
        w = eta.scaled(R, r)
    else:
        raise ValueError(f"unknown multiplier mode {mode!r}")
    return w


def _apply_lattice(coeffs: np.ndarray, values: np.ndarray, scalar: bool) -> np.ndarray:
    flat = coeffs.reshape(-1, coeffs.shape[-1])
    if scalar:
        return flat * values[:, None]
    out = np.empty((flat.shape[0], values.shape[1]), dtype=complex)
    out[:] = np.einsum("mij,mj->mi", values, flat)
    return out


def apply_multiplier(symbol: MultiplierSymbol, field: SampledField, mode: str = "full",
                     R: float | None = None, eta: CutoffProfile = RAISED_COSINE) -> SampledField:
    """T_Psi with an optional radial factor (1 - eta_R) or eta_R.

    The k=0 bin is multiplied by 0 in full/highpass mode and by 1 in bandlimit mode.
    """
    grid = field.grid
    if not symbol.is_scalar and symbol.shape[1] != field.N:
        raise ValueError(f"symbol acts on C^{symbol.shape[1]}, field has N={field.N}")
    weight = _radial_weight(grid, mode, R, eta)
    unit, r = _lattice(grid)
    zero = r == 0
    coeffs = dft(field).coeffs.reshape(-1, field.N)
    n_out = field.N if symbol.is_scalar else symbol.shape[0]
    out = np.empty((coeffs.shape[0], n_out), dtype=complex)
    active = np.flatnonzero((weight != 0) & ~zero)
    out[:] = 0.0
    table = _lattice_values(symbol, grid)
    for s in range(0, active.size, _CHUNK):
        idx = active[s : s + _CHUNK]
        vals = symbol.raw(unit[idx]) if table is None else table[idx]
        vals = vals * (weight[idx] if symbol.is_scalar else weight[idx][:, None, None])
        out[idx] = _apply_lattice(coeffs[idx], vals, symbol.is_scalar)
    if mode == "bandlimit":
        if n_out != field.N:
            raise ValueError("bandlimit mode needs a square symbol")
        out[zero] = coeffs[zero]
    spec = SpectralField(grid, out.reshape(grid.shape + (n_out,)))
    return dft(spec, "inverse")


def apply_lattice_multiplier(fn: Callable[[np.ndarray], np.ndarray], field: SampledField,
                             n_out: int | None = None) -> SampledField:
    """Multiply Fourier coefficients by ``fn(k)`` for real lattice vectors k.

    ``fn`` returns ``(M,)`` scalars or ``(M, n_out, N)`` matrices; used for
    symbols that are not 0-homogeneous (bounded symbols, time shifts).
    """
    grid = field.grid
    k = grid.frequencies().astype(float)
    coeffs = dft(field).coeffs.reshape(-1, field.N)
    probe = np.asarray(fn(k[:1]))
    scalar = probe.ndim == 1
    n_out = field.N if scalar else probe.shape[1]
    out = np.empty((coeffs.shape[0], n_out), dtype=complex)
    for s in range(0, k.shape[0], _CHUNK):
        sl = slice(s, s + _CHUNK)
        out[sl] = _apply_lattice(coeffs[sl], np.asarray(fn(k[sl]), dtype=complex), scalar)
    return dft(SpectralField(grid, out.reshape(grid.shape + (n_out,))), "inverse")


def lattice_operator_norm(symbol: MultiplierSymbol, grid: Grid, N: int) -> float:
    """max over nonzero lattice frequencies of the spectral norm of Psi(k/|k|)."""
    unit, r = _lattice(grid)
    best = 0.0
    idx = np.flatnonzero(r > 0)
    for s in range(0, idx.size, _CHUNK):
        m = symbol.matrices(unit[idx[s : s + _CHUNK]], N)
        best = max(best, float(np.linalg.norm(m, ord=2, axis=(1, 2)).max()))
    return best


SYMBOLS = {
    "identity": lambda **kw: identity(),
    "half-space": lambda xi0, width=0.0: half_space(xi0, width),
    "cone-cutoff": lambda xi0, half_angle: cone_cutoff(xi0, half_angle),
    "two-point": lambda plus, minus: two_point(plus, minus),
}
