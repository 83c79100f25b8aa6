"""Periodic grids, sampled vector fields, quadrature and the DFT.

The domain is the flat unit torus [0,1)^d sampled at cell centers
x_i = (i + 1/2)/n.  Fields carry C^N values at every grid point, stored as
an array of shape ``grid.shape + (N,)``.

Fourier coefficients follow the Fourier-series convention

    c(k) = int u(x) exp(-2 pi i k.x) dx  ~  n^{-d} sum_i u(x_i) exp(-2 pi i k.x_i),

so the transform is unitary between L^2(torus) and l^2(Z^d) and Parseval
reads ``sum |u|^2 * cellvol == sum |c|^2``.  The half-cell phase of the
cell-center points is included, so coefficients of e^{2 pi i k.x} are
exactly 1 at k.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

_HEADER = struct.Struct("<III")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on [0,1)^d."""

    d: int
    n: int

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension must be 1..3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return float(self.n) ** (-self.d)

    @property
    def nyquist(self) -> float:
        return self.n / 2

    def axis_points(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def axis_frequencies(self) -> np.ndarray:
        # FFT ordering, Nyquist bin mapped to +n/2
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    def points(self) -> np.ndarray:
        """Cell centers, shape ``(n^d, d)`` in C order."""
        axes = np.meshgrid(*([self.axis_points()] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def frequencies(self) -> np.ndarray:
        """Integer lattice frequencies, shape ``(n^d, d)`` in FFT order."""
        axes = np.meshgrid(*([self.axis_frequencies()] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-pi i k/n) per axis, accounts for the half-cell offset
        ph = np.exp(-1j * np.pi * self.axis_frequencies() / self.n)
        out = ph
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, ph)
        return out


def _check_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.shape == grid.shape:
        values = values[..., None]
    if values.shape[:-1] != grid.shape or values.ndim != grid.d + 1:
        raise ValueError(f"values of shape {values.shape} do not match grid {grid.shape}")
    return values


@dataclass(frozen=True, eq=False)
class SampledField:
    """C^N-valued samples on a grid; values have shape ``grid.shape + (N,)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _check_values(self.grid, self.values)
        if not np.all(np.isfinite(values)):
            idx = np.argwhere(~np.isfinite(values))[0]
            x = (idx[:-1] + 0.5) / self.grid.n
            raise ValueError(f"non-finite field value at x={tuple(x)}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[-1]

    def flat(self) -> np.ndarray:
        """Values as an ``(n^d, N)`` array."""
        return self.values.reshape(-1, self.N)

    def _new(self, values) -> "SampledField":
        return SampledField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, SampledField):
            return self._new(self.values + other.values)
        return self._new(self.values + np.asarray(other))

    def __sub__(self, other):
        if isinstance(other, SampledField):
            return self._new(self.values - other.values)
        return self._new(self.values - np.asarray(other))

    def __mul__(self, scalar):
        if isinstance(scalar, SampledField):
            if scalar.N != 1:
                raise ValueError("field products need a scalar factor")
            return self._new(self.values * scalar.values)
        return self._new(self.values * scalar)

    __rmul__ = __mul__

    def conj(self) -> "SampledField":
        return self._new(self.values.conj())

    def component(self, i: int) -> "SampledField":
        return self._new(self.values[..., i : i + 1])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients on the frequency lattice, FFT ordering."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = _check_values(self.grid, self.coeffs).copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def N(self) -> int:
        return self.coeffs.shape[-1]


def sample_field(fn: Callable[[np.ndarray], np.ndarray], grid: Grid) -> SampledField:
    """Evaluate ``fn`` at the cell centers.

    ``fn`` receives points of shape ``(M, d)`` and returns ``(M,)`` or ``(M, N)``.
    """
    pts = grid.points()
    vals = np.asarray(fn(pts), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    bad = ~np.all(np.isfinite(vals), axis=-1)
    if bad.any():
        raise ValueError(f"non-finite field value at x={tuple(pts[np.argmax(bad)])}")
    return SampledField(grid, vals.reshape(grid.shape + (vals.shape[-1],)))


def constant_field(grid: Grid, c) -> SampledField:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    return SampledField(grid, np.broadcast_to(c, grid.shape + c.shape))


def integrate(field: SampledField, weight: Callable[[np.ndarray], np.ndarray] | None = None):
    """Riemann sum over cells times the cell volume.

    Without ``weight`` the result is complex for N=1 and a length-N array
    otherwise.  ``weight`` maps an ``(M, N)`` value array to ``(M,)``.
    """
    if weight is not None:
        return complex(np.sum(weight(field.flat())) * field.grid.cell_volume)
    s = field.flat().sum(axis=0) * field.grid.cell_volume
    return complex(s[0]) if field.N == 1 else s


def dot_integral(a: SampledField, b: SampledField) -> complex:
    """int a . conj(b) dx with the bilinear dot product over components."""
    return complex(np.sum(a.values * b.values.conj()) * a.grid.cell_volume)


def _axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(grid.d))


def dft(field, direction: str = "forward"):
    """Forward: SampledField -> SpectralField.  Inverse: the reverse."""
    if direction == "forward":
        if not isinstance(field, SampledField):
            raise TypeError("forward transform expects a SampledField")
        g = field.grid
        c = np.fft.fftn(field.values, axes=_axes(g)) * g.cell_volume
        return SpectralField(g, c * g._phase[..., None])
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        g = field.grid
        c = field.coeffs / g._phase[..., None]
        return SampledField(g, np.fft.ifftn(c, axes=_axes(g)) * g.size)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def lp_norm(field: SampledField, p: float) -> float:
    if not 1 < p < np.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    mag = np.linalg.norm(field.flat(), axis=-1)
    return float((np.sum(mag**p) * field.grid.cell_volume) ** (1.0 / p))


# -- serialization -----------------------------------------------------------


def to_bytes(field: SampledField) -> bytes:
    """Header (d, n, N as little-endian uint32) then interleaved re/im f64."""
    g = field.grid
    body = np.ascontiguousarray(field.values).view("<f8").astype("<f8", copy=False)
    return _HEADER.pack(g.d, g.n, field.N) + body.tobytes()


def from_bytes(data: bytes) -> SampledField:
    d, n, N = _HEADER.unpack_from(data)
    grid = Grid(d, n)
    raw = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if raw.size != 2 * grid.size * N:
        raise ValueError("payload length does not match header")
    vals = raw.view("<c16").reshape(grid.shape + (N,))
    return SampledField(grid, vals)


def write_binary(field: SampledField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(field))


def read_binary(path) -> SampledField:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def write_csv(field: SampledField, path) -> None:
    g = field.grid
    header = [f"x{a + 1}" for a in range(g.d)]
    for c in range(field.N):
        header += [f"re{c}", f"im{c}"]
    pts = g.points()
    vals = field.flat()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, v in zip(pts, vals):
            row = [format(t, ".17g") for t in x]
            for z in v:
                row += [format(z.real, ".17g"), format(z.imag, ".17g")]
            w.writerow(row)
