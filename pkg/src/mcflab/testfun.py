"""Test integrands f(x,z,q) = phi(x) h(z) . q, the S^q transform and recession.

Vertical factors act on arrays of shape ``(M, N)`` and return ``(M, N)``.
Spatial factors act on points ``(M, d)`` and return ``(M,)``.  An integrand
may be a finite sum of such products, which keeps linear combinations exact
for both the empirical and the closed-form side.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

Map = Callable[[np.ndarray], np.ndarray]


def _norm(z: np.ndarray) -> np.ndarray:
    return np.linalg.norm(z, axis=-1)


def s_transform(fn: Map, q: float, direction: str = "compactify",
                recession: Map | None = None) -> Map:
    """S^q (compactify) or S^{-q} (decompactify) of a vertical map.

    compactify: w -> (1-|w|)^q fn(w/(1-|w|)), sphere values from ``recession``.
    decompactify: z -> (1+|z|)^q fn(z/(1+|z|)).
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if direction == "compactify":

        def S(w):
            w = np.atleast_2d(np.asarray(w, dtype=complex))
            r = _norm(w)
            out = np.empty(w.shape, dtype=complex)
            inside = r < 1.0
            if inside.any():
                s = 1.0 - r[inside]
                out[inside] = s[:, None] ** q * fn(w[inside] / s[:, None])
            if (~inside).any():
                if recession is None:
                    raise ValueError("sphere value needs recession data")
                e = w[~inside] / r[~inside, None]
                out[~inside] = recession(e)
            return out

        return S
    if direction == "decompactify":

        def Sinv(z):
            z = np.atleast_2d(np.asarray(z, dtype=complex))
            s = 1.0 + _norm(z)
            return s[:, None] ** q * fn(z / s[:, None])

        return Sinv
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True, eq=False)
class _Part:
    h: Map
    phi: Map | None
    recession: Map | None
    ball: Map | None
    weight: complex = 1.0


@dataclass(frozen=True, eq=False)
class TestIntegrand:
    """f(x,z,q) = sum_parts weight * phi(x) h(z) . q with growth exponent p.

    ``recession`` gives h-infinity on unit vectors when known in closed form.
    ``ball`` gives S^{p-1}h on the closed ball when h was specified that way.
    ``bounded`` flags that S^{p-1}h extends continuously to the sphere.
    """

    __test__ = False  # not a pytest class

    parts: tuple
    p: float
    N: int
    bounded: bool = True
    name: str = "f"

    @classmethod
    def make(cls, h: Map, p: float, N: int, phi: Map | None = None,
             recession: Map | None = None, ball: Map | None = None,
             bounded: bool = True, name: str = "f") -> "TestIntegrand":
        return cls((_Part(h, phi, recession, ball),), float(p), int(N), bounded, name)

    @classmethod
    def from_ball(cls, g: Map, p: float, N: int, phi: Map | None = None,
                  name: str = "f") -> "TestIntegrand":
        """h = S^{-(p-1)} g for g continuous on the closed unit ball."""
        h = s_transform(g, p - 1, "decompactify")
        return cls.make(h, p, N, phi=phi, recession=g, ball=g, name=name)

    # -- algebra --------------------------------------------------------------

    def __add__(self, other: "TestIntegrand") -> "TestIntegrand":
        if self.p != other.p or self.N != other.N:
            raise ValueError("integrands must share p and N")
        return TestIntegrand(self.parts + other.parts, self.p, self.N,
                             self.bounded and other.bounded, f"{self.name}+{other.name}")

    def scale(self, alpha) -> "TestIntegrand":
        parts = tuple(replace(pt, weight=pt.weight * complex(alpha)) for pt in self.parts)
        return replace(self, parts=parts, name=f"{alpha}*{self.name}")

    def with_phi(self, phi: Map) -> "TestIntegrand":
        """Multiply the spatial factor of every part by ``phi``."""

        def combine(old):
            if old is None:
                return phi
            return lambda x: old(x) * phi(x)

        parts = tuple(replace(pt, phi=combine(pt.phi)) for pt in self.parts)
        return replace(self, parts=parts)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """h(x, z) for points ``x`` (M,d) and values ``z`` (M,N)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for pt in self.parts:
            v = pt.weight * pt.h(z)
            if pt.phi is not None:
                v = v * np.asarray(pt.phi(x))[:, None]
            out += v
        return out

    def h(self, z: np.ndarray) -> np.ndarray:
        """Vertical factor; only defined when no part carries a spatial factor."""
        if any(pt.phi is not None for pt in self.parts):
            raise ValueError("integrand has x-dependence; use evaluate")
        return self.evaluate(None, z)

    def ball(self, w: np.ndarray) -> np.ndarray:
        """S^{p-1}h on the closed ball (x-independent integrands)."""
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        out = np.zeros(w.shape, dtype=complex)
        for pt in self.parts:
            if pt.phi is not None:
                raise ValueError("integrand has x-dependence")
            g = pt.ball or s_transform(pt.h, self.p - 1, "compactify", self._recession_of(pt))
            out += pt.weight * g(w)
        return out

    def _recession_of(self, pt: _Part) -> Map | None:
        if pt.recession is not None:
            return pt.recession
        if pt.ball is not None:
            return pt.ball
        return None

    def has_recession(self) -> bool:
        return all(self._recession_of(pt) is not None for pt in self.parts)

    def part_recession(self, pt: _Part, e: np.ndarray) -> np.ndarray:
        rec = self._recession_of(pt)
        if rec is None:
            rec = numerical_recession(pt.h, self.p)
        return rec(e)


def numerical_recession(h: Map, p: float, delta: float = 1e-3, levels: int = 4,
                        rtol: float = 1e-3) -> Map:
    """h-infinity by radial refinement of S^{p-1}h toward the sphere.

    Radii 1 - delta*4^{-m}, m = 0..levels; the last refinement must change the
    value by less than ``rtol`` relative, otherwise no recession exists.
    """
    S = s_transform(h, p - 1, "compactify")

    def rec(e):
        e = np.atleast_2d(np.asarray(e, dtype=complex))
        vals = [S(e * (1.0 - delta * 4.0**-m)) for m in range(levels + 1)]
        last = np.abs(vals[-1] - vals[-2]).max()
        prev = np.abs(vals[-2] - vals[-3]).max()
        scale = 1.0 + np.abs(vals[-1]).max()
        if last > rtol * scale and not last < 0.5 * prev:
            raise ValueError("no recession function")
        if last > 10 * rtol * scale:
            raise ValueError("no recession function")
        return vals[-1]

    return rec


def _ball_samples(N: int, density: int) -> tuple[np.ndarray, np.ndarray]:
    """Interior points of the closed ball in C^N and points on its sphere."""
    D = 2 * N
    if D <= 2:
        t = np.linspace(-1.0, 1.0, density)
        a, b = np.meshgrid(t, t, indexing="ij")
        w = (a + 1j * b).ravel()[:, None]
        w = np.vstack([np.zeros((1, 1)), w[np.abs(w[:, 0]) < 1.0]])
        ang = 2 * np.pi * (np.arange(4 * density) + 0.5) / (4 * density)
        e = np.exp(1j * ang)[:, None]
        return w, e
    pts = qmc.Halton(d=D, scramble=False).random(density**2 + 1)[1:]
    x = 2.0 * pts - 1.0
    x = x[np.linalg.norm(x, axis=1) < 1.0]
    w = np.vstack([np.zeros((1, N)), x[:, :N] + 1j * x[:, N:]])
    dirs = qmc.Halton(d=D, scramble=False).random(4 * density + 1)[1:] * 2.0 - 1.0
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    e = dirs[:, :N] + 1j * dirs[:, N:]
    return w, e


def fp_norm_and_recession(f: TestIntegrand, density: int = 64) -> tuple[float, Map]:
    """sup |S^{p-1}h| over ball samples and the recession map h-infinity.

    Parts without closed-form recession data are refined radially; divergence
    raises ``ValueError("no recession function")``.
    """
    w, e = _ball_samples(f.N, density)
    recs = []
    for pt in f.parts:
        if pt.phi is not None:
            raise ValueError("norm is computed for x-independent integrands")
        r = f._recession_of(pt)
        if r is None:
            r = numerical_recession(pt.h, f.p)
            r(e)  # raises when divergent
        recs.append((pt.weight, r))

    def hinf(u):
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        return sum(wt * r(u) for wt, r in recs)

    inner = f.ball(w) if all(f._recession_of(pt) is not None for pt in f.parts) else \
        sum(pt.weight * s_transform(pt.h, f.p - 1, "compactify")(w) for pt in f.parts)
    norm = max(float(_norm(inner).max()), float(_norm(hinf(e)).max()))
    return norm, hinf


# -- registry ------------------------------------------------------------------


def identity(N: int = 1, p: float = 2.0) -> TestIntegrand:
    """h(z) = z (in F^p for p >= 2; recession e for p = 2, 0 for p > 2)."""
    if p < 2:
        raise ValueError("h(z)=z needs p >= 2")
    rec = (lambda e: e) if p == 2 else (lambda e: np.zeros_like(e))
    return TestIntegrand.make(lambda z: z, p, N, recession=rec, name="identity")


def power(N: int = 1, p: float = 2.0) -> TestIntegrand:
    """h(z) = |z|^{p-2} z, exactly (p-1)-homogeneous."""

    def h(z):
        r = _norm(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(r > 0, r ** (p - 2), 0.0)
        return f[:, None] * z

    return TestIntegrand.make(h, p, N, recession=lambda e: e, name="power")


def ramp(t: np.ndarray) -> np.ndarray:
    """g(t) = 0 for t < 1/2, 2t - 1 on [1/2, 1], 1 for t > 1."""
    return np.clip(2.0 * t - 1.0, 0.0, 1.0)


def truncation(K: float, N: int = 1, p: float = 2.0) -> TestIntegrand:
    """h_K(z) = g(|z|/K) |z|^{p-2} z."""
    if not K > 0:
        raise ValueError("truncation level K must be positive")
    base = power(N, p).parts[0].h
    h = lambda z: ramp(_norm(z) / K)[:, None] * base(z)
    return TestIntegrand.make(h, p, N, recession=lambda e: e, name=f"truncation-{K}")


def ball_coords(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return z / (1.0 + _norm(z))[:, None]


def window(z0, width: float, p: float = 2.0, N: int = 1, vector=None,
           at_infinity: bool = False) -> TestIntegrand:
    """Triangular bump of radius ``width`` in ball coordinates around z0.

    For ``at_infinity`` z0 is a sphere direction and the bump is a sphere cap.
    The output points along ``vector`` (default: z0 direction or e1).
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    if at_infinity:
        w0 = z0 / np.linalg.norm(z0)
    else:
        w0 = ball_coords(z0[None, :])[0]
    if vector is None:
        nz = np.linalg.norm(z0)
        vector = z0 / nz if nz > 0 else np.eye(N)[0]
    v = np.asarray(vector, dtype=complex)

    def g(w):
        b = np.clip(1.0 - _norm(w - w0) / width, 0.0, None)
        return b[:, None] * v

    f = TestIntegrand.from_ball(g, p, N, name="window")
    return f


def anisotropy(n0, m: int, d: int) -> TestIntegrand:
    """f(A) = |A|^2 - n0^T A^T A n0 = h(A) : A with h(A) = A (I - n0 n0^T)."""
    n0 = np.asarray(n0, dtype=float)
    P = np.eye(d) - np.outer(n0, n0)

    def h(z):
        A = z.reshape(-1, m, d)
        return (A @ P).reshape(-1, m * d)

    return TestIntegrand.make(h, 2.0, m * d, recession=h, name="anisotropy")


def trig_phi(k, kind: str = "cos") -> Map:
    """Spatial factor cos(2 pi k.x) or sin(2 pi k.x) for an integer vector k."""
    k = np.asarray(k, dtype=float)
    if kind == "cos":
        return lambda x: np.cos(2 * np.pi * (x @ k))
    return lambda x: np.sin(2 * np.pi * (x @ k))


def _bernstein(i: int, n: int, t: np.ndarray) -> np.ndarray:
    from math import comb

    return comb(n, i) * t**i * (1 - t) ** (n - i)


def battery(p: float, N: int, d: int, degree: int = 1, size: int | None = None
                 ) -> list[TestIntegrand]:
    """Reproducible family phi_m * S^{-(p-1)}(Bernstein polynomial * e_c)."""
    phis: list[tuple[str, Map | None]] = [("1", None)]
    for a in range(d):
        e = np.eye(d)[a]
        phis += [(f"cos{a}", trig_phi(e, "cos")), (f"sin{a}", trig_phi(e, "sin"))]
    out = []
    D = 2 * N
    multi = np.array(np.meshgrid(*([np.arange(degree + 1)] * D), indexing="ij")).reshape(D, -1).T
    for pname, phi in phis:
        for c in range(N):
            for alpha in multi:

                def g(w, alpha=alpha, c=c):
                    coords = np.concatenate([w.real, w.imag], axis=1)
                    t = 0.5 * (coords + 1.0)
                    val = np.ones(w.shape[0])
                    for r, a in enumerate(alpha):
                        val = val * _bernstein(int(a), degree, t[:, r])
                    out_ = np.zeros(w.shape, dtype=complex)
                    out_[:, c] = val
                    return out_

                f = TestIntegrand.from_ball(g, p, N, phi=phi,
                                            name=f"bern{tuple(alpha)}e{c}*{pname}")
                out.append(f)
    return out if size is None else out[:size]


INTEGRANDS = {
    "identity": identity,
    "power": power,
    "truncation": truncation,
    "window": window,
    "anisotropy": anisotropy,
}


def combine_vertical(maps: Sequence[tuple[complex, Map]]) -> Map:
    return lambda z: sum(c * m(z) for c, m in maps)
