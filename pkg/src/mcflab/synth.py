"""Generators of oscillating, concentrating and laminated sequences.

Every generator evaluates u_j pointwise (``evaluate(j, x)``), so sampling on
any grid, restriction to strips and composition are exact.  Directions on the
torus are integer lattice vectors m; an oscillation along n0 = m/|m| uses the
phase j (m . x), which is the torus-periodic realization of w(j x . n0).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from mcflab.field import Grid, SampledField, constant_field, sample_field

Atoms = list[tuple[np.ndarray, float]]


def _vec(z, N=None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(z, dtype=complex))
    if N is not None and v.size != N:
        raise ValueError(f"expected a vector in C^{N}, got {v.size} entries")
    return v


def lattice_direction(n0, max_den: int = 16) -> np.ndarray:
    """Smallest integer vector m with m/|m| = n0; rejects irrational directions."""
    n0 = np.atleast_1d(np.asarray(n0, dtype=float))
    if n0.size == 1:
        if abs(abs(n0[0]) - 1) > 1e-12:
            raise ValueError("d=1 direction must be +1 or -1")
        return np.sign(n0).astype(int)
    big = np.argmax(np.abs(n0))
    ratios = [Fraction(float(c / n0[big])).limit_denominator(max_den) for c in n0]
    den = np.lcm.reduce([r.denominator for r in ratios])
    m = np.array([int(r * den) for r in ratios]) * int(np.sign(n0[big]))
    g = np.gcd.reduce(np.abs(m))
    m = m // g
    if np.linalg.norm(m / np.linalg.norm(m) - n0 / np.linalg.norm(n0)) > 1e-9:
        raise ValueError(f"direction {n0.tolist()} is not rational; torus periodicity violated")
    return m


# -- profiles ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Profile:
    """1-periodic profile w: R -> C^N with its mean and Young-measure atoms."""

    fn: Callable[[np.ndarray], np.ndarray]
    N: int
    mean: np.ndarray
    atoms: Atoms | None
    name: str
    params: dict = dc_field(default_factory=dict)

    def __call__(self, s):
        return self.fn(np.asarray(s, dtype=float))


def two_state(A, B, theta: float) -> Profile:
    """w = A on [0, theta), B on [theta, 1), extended periodically."""
    A = _vec(A)
    B = _vec(B, A.size)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")

    def fn(s):
        inside = np.mod(s, 1.0) < theta
        return np.where(inside[:, None], A, B)

    return Profile(fn, A.size, theta * A + (1 - theta) * B,
                   [(A, theta), (B, 1 - theta)], "two-state",
                   {"A": A, "B": B, "theta": theta})


def sine(Z=1.0, quadrature: int = 64) -> Profile:
    """w(s) = sin(2 pi s) Z; the arcsine Young measure is given by a quadrature rule."""
    Z = _vec(Z)
    nodes = np.sin(2 * np.pi * (np.arange(quadrature) + 0.5) / quadrature)
    atoms = [(t * Z, 1.0 / quadrature) for t in nodes]
    return Profile(lambda s: np.sin(2 * np.pi * s)[:, None] * Z, Z.size,
                   np.zeros(Z.size, dtype=complex), atoms, "sine", {"Z": Z})


def exponential(Z=1.0, quadrature: int = 64) -> Profile:
    """w(s) = exp(2 pi i s) Z, a one-sided oscillation."""
    Z = _vec(Z)
    nodes = np.exp(2j * np.pi * (np.arange(quadrature) + 0.5) / quadrature)
    atoms = [(t * Z, 1.0 / quadrature) for t in nodes]
    return Profile(lambda s: np.exp(2j * np.pi * s)[:, None] * Z, Z.size,
                   np.zeros(Z.size, dtype=complex), atoms, "exponential", {"Z": Z})


def tent(x: np.ndarray) -> np.ndarray:
    """w(x) = max(0, 1 - |4x|) per axis product (support in [-1/4, 1/4]^d)."""
    x = np.atleast_2d(x)
    return np.prod(np.clip(1.0 - np.abs(4.0 * x), 0.0, None), axis=1)


# -- generators ----------------------------------------------------------------


class SequenceGenerator:
    """Family u_j indexed by j with a declared weak limit and exponent p."""

    kind = "generator"
    p: float = 2.0
    N: int = 1
    d: int = 1

    def evaluate(self, j: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def emit(self, j: int, grid: Grid) -> SampledField:
        if grid.d != self.d:
            raise ValueError(f"generator lives in d={self.d}, grid has d={grid.d}")
        return sample_field(lambda x: self.evaluate(j, x), grid)

    def weak_limit_value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def weak_limit(self, grid: Grid) -> SampledField:
        return sample_field(self.weak_limit_value, grid)

    def max_frequency(self, j: int) -> float | None:
        """Dominant frequency magnitude of u_j (None for broadband sequences)."""
        return None

    def min_frequency(self, j: int) -> float | None:
        """Lowest nonzero frequency magnitude carried by u_j - u."""
        return None

    def young_atoms(self) -> Atoms | None:
        return None

    def mean(self) -> np.ndarray:
        """Constant weak limit; raises for non-constant limits."""
        raise ValueError(f"{self.kind} has no constant weak limit")

    def descriptor(self) -> dict:
        return {"kind": self.kind}


@dataclass(eq=False)
class Constant(SequenceGenerator):
    c: np.ndarray
    d: int = 1
    p: float = 2.0
    kind = "constant"

    def __post_init__(self):
        self.c = _vec(self.c)
        self.N = self.c.size

    def evaluate(self, j, x):
        return np.broadcast_to(self.c, (np.atleast_2d(x).shape[0], self.N)).copy()

    def emit(self, j, grid):
        return constant_field(grid, self.c)

    def weak_limit_value(self, x):
        return self.evaluate(0, x)

    def mean(self):
        return self.c

    def young_atoms(self):
        return [(self.c, 1.0)]

    def descriptor(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(eq=False)
class Oscillation(SequenceGenerator):
    """u_j(x) = w(j m . x) for an integer direction m."""

    profile: Profile
    direction: Sequence[int] = (1,)
    p: float = 2.0
    kind = "oscillation"

    def __post_init__(self):
        self.m = np.asarray(self.direction, dtype=int)
        self.d = self.m.size
        self.N = self.profile.N

    @property
    def n0(self) -> np.ndarray:
        return self.m / np.linalg.norm(self.m)

    def evaluate(self, j, x):
        x = np.atleast_2d(x)
        return self.profile(j * (x @ self.m))

    def weak_limit_value(self, x):
        return np.broadcast_to(self.profile.mean, (np.atleast_2d(x).shape[0], self.N)).copy()

    def mean(self):
        return self.profile.mean

    def max_frequency(self, j):
        return j * float(np.abs(self.m).max())

    def min_frequency(self, j):
        return j * float(np.linalg.norm(self.m))

    def young_atoms(self):
        return self.profile.atoms

    def descriptor(self):
        return {"kind": self.kind, "profile": self.profile.name,
                "params": self.profile.params, "direction": self.m.tolist(), "p": self.p}


def osc_profile(w: Profile, n0, j: int, grid: Grid) -> SampledField:
    return Oscillation(w, tuple(lattice_direction(n0))).emit(j, grid)


@dataclass(eq=False)
class Concentration(SequenceGenerator):
    """u_j(x) = Z0 j^{d/p} w(j x) with x taken in the cell [-1/2, 1/2)^d."""

    w: Callable[[np.ndarray], np.ndarray]
    Z0: np.ndarray
    p: float = 2.0
    d: int = 1
    name: str = "tent"
    kind = "concentration"

    def __post_init__(self):
        self.Z0 = _vec(self.Z0)
        self.N = self.Z0.size

    def evaluate(self, j, x):
        x = np.atleast_2d(x)
        y = np.mod(x + 0.5, 1.0) - 0.5
        amp = j ** (self.d / self.p) * self.w(j * y)
        return amp[:, None] * self.Z0

    def weak_limit_value(self, x):
        return np.zeros((np.atleast_2d(x).shape[0], self.N), dtype=complex)

    def mean(self):
        return np.zeros(self.N, dtype=complex)

    def young_atoms(self):
        return [(np.zeros(self.N, dtype=complex), 1.0)]

    def descriptor(self):
        return {"kind": self.kind, "profile": self.name, "Z0": self.Z0, "p": self.p, "d": self.d}


def concentration(w, Z0, p: float, j: int, grid: Grid) -> SampledField:
    return Concentration(w, Z0, p, grid.d).emit(j, grid)


@dataclass(eq=False)
class Damped(SequenceGenerator):
    """u_j = offset + base_j / j^power, a strongly convergent sequence."""

    base: SequenceGenerator
    power: float = 1.0
    offset: np.ndarray | None = None
    kind = "damped"

    def __post_init__(self):
        self.d, self.N, self.p = self.base.d, self.base.N, self.base.p
        self.offset = np.zeros(self.N, dtype=complex) if self.offset is None else _vec(self.offset, self.N)

    def evaluate(self, j, x):
        return self.offset + self.base.evaluate(j, x) / j**self.power

    def weak_limit_value(self, x):
        return np.broadcast_to(self.offset, (np.atleast_2d(x).shape[0], self.N)).copy()

    def mean(self):
        return self.offset

    def max_frequency(self, j):
        return self.base.max_frequency(j)

    def min_frequency(self, j):
        return self.base.min_frequency(j)

    def young_atoms(self):
        return [(self.offset, 1.0)]

    def descriptor(self):
        return {"kind": self.kind, "base": self.base.descriptor(), "power": self.power}


@dataclass(eq=False)
class Patched(SequenceGenerator):
    """``inside`` on {region(x)}, ``outside`` elsewhere."""

    inside: SequenceGenerator
    outside: SequenceGenerator
    region: Callable[[np.ndarray], np.ndarray]
    kind = "patched"

    def __post_init__(self):
        if (self.inside.N, self.inside.d) != (self.outside.N, self.outside.d):
            raise ValueError("patched generators must share N and d")
        self.d, self.N, self.p = self.inside.d, self.inside.N, self.inside.p

    def evaluate(self, j, x):
        x = np.atleast_2d(x)
        mask = np.asarray(self.region(x), dtype=bool)
        return np.where(mask[:, None], self.inside.evaluate(j, x), self.outside.evaluate(j, x))

    def weak_limit_value(self, x):
        x = np.atleast_2d(x)
        mask = np.asarray(self.region(x), dtype=bool)
        return np.where(mask[:, None], self.inside.weak_limit_value(x),
                        self.outside.weak_limit_value(x))

    def max_frequency(self, j):
        a, b = self.inside.max_frequency(j), self.outside.max_frequency(j)
        return None if a is None or b is None else max(a, b)

    def descriptor(self):
        return {"kind": self.kind, "inside": self.inside.descriptor(),
                "outside": self.outside.descriptor()}


@dataclass(eq=False)
class Laminate(SequenceGenerator):
    """Strip mixture of two generators at slow scale k.

    Strips {frac(k m . x) < theta} carry gen1, the complement carries gen2.
    Each strip holds the fast field restricted to it; for the homogeneous
    inputs used here this has the same j-limit as the rescaled cube copies
    and keeps the fast frequency at j instead of j k / theta.  The declared
    weak limit is the diagonal limit X = theta A + (1 - theta) B.
    """

    gen1: SequenceGenerator
    gen2: SequenceGenerator
    theta: float
    direction: Sequence[int] = (1,)
    k: int = 4
    kind = "laminate"

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        self.m = np.asarray(self.direction, dtype=int)
        if (self.gen1.N, self.gen1.d) != (self.gen2.N, self.gen2.d):
            raise ValueError("laminated generators must share N and d")
        if self.m.size != self.gen1.d:
            raise ValueError("lamination direction has wrong dimension")
        self.d, self.N, self.p = self.gen1.d, self.gen1.N, self.gen1.p
        self.A = self.gen1.mean()
        self.B = self.gen2.mean()

    @property
    def n0(self) -> np.ndarray:
        return self.m / np.linalg.norm(self.m)

    @property
    def X(self) -> np.ndarray:
        return self.theta * self.A + (1 - self.theta) * self.B

    def strip_mask(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.mod(self.k * (x @ self.m), 1.0) < self.theta

    def evaluate(self, j, x):
        self.check_scales(j)
        x = np.atleast_2d(x)
        mask = self.strip_mask(x)
        out = np.empty((x.shape[0], self.N), dtype=complex)
        if mask.any():
            out[mask] = self.gen1.evaluate(j, x[mask])
        if (~mask).any():
            out[~mask] = self.gen2.evaluate(j, x[~mask])
        return out

    def check_scales(self, j):
        if j < 8 * self.k:
            raise ValueError(f"scale separation violated: j={j} < 8k={8 * self.k}")

    def emit(self, j, grid):
        fast = self.max_frequency(j)
        if fast is not None and fast > grid.nyquist / 4:
            raise ValueError(f"scale separation violated: fast frequency {fast} > Nyquist/4")
        return super().emit(j, grid)

    def slow_limit(self, grid: Grid) -> SampledField:
        """w-bar_k: A on gen1 strips, B on gen2 strips."""
        return sample_field(lambda x: np.where(self.strip_mask(x)[:, None], self.A, self.B), grid)

    def weak_limit_value(self, x):
        return np.broadcast_to(self.X, (np.atleast_2d(x).shape[0], self.N)).copy()

    def mean(self):
        return self.X

    def max_frequency(self, j):
        fr = [g.max_frequency(j) for g in (self.gen1, self.gen2)]
        fr = [f for f in fr if f is not None]
        return max(fr) if fr else float(self.k * np.abs(self.m).max())

    def min_frequency(self, j):
        return float(self.k * np.linalg.norm(self.m))

    def young_atoms(self):
        a1, a2 = self.gen1.young_atoms(), self.gen2.young_atoms()
        if a1 is None or a2 is None:
            return None
        return [(z, self.theta * m) for z, m in a1] + [(z, (1 - self.theta) * m) for z, m in a2]

    def descriptor(self):
        return {"kind": self.kind, "gen1": self.gen1.descriptor(), "gen2": self.gen2.descriptor(),
                "theta": self.theta, "direction": self.m.tolist(), "k": self.k}


def laminate_mix(gen1, gen2, theta, n0, k, j, grid: Grid) -> SampledField:
    return Laminate(gen1, gen2, theta, tuple(lattice_direction(n0)), k).emit(j, grid)


@dataclass(eq=False)
class FieldSequence(SequenceGenerator):
    """Precomputed fields u_j on a fixed grid with a given weak limit field."""

    fields: dict
    limit: SampledField
    p: float = 2.0
    freq: Callable[[int], float] | None = None
    kind = "fields"

    def __post_init__(self):
        self.grid = self.limit.grid
        self.d, self.N = self.grid.d, self.limit.N

    def emit(self, j, grid):
        if grid != self.grid:
            raise ValueError("precomputed sequence lives on a different grid")
        return self.fields[j]

    def weak_limit(self, grid):
        return self.limit

    def max_frequency(self, j):
        return None if self.freq is None else self.freq(j)

    def descriptor(self):
        return {"kind": self.kind, "j": sorted(self.fields)}


def value_histogram(field: SampledField, decimals: int = 9) -> Atoms:
    """Distinct values (rounded) and their volume fractions."""
    v = np.round(field.flat(), decimals)
    keys, counts = np.unique(np.concatenate([v.real, v.imag], axis=1), axis=0, return_counts=True)
    N = field.N
    out = [(k[:N] + 1j * k[N:], c / v.shape[0]) for k, c in zip(keys, counts)]
    return out
