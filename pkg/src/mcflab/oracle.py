"""Closed-form MCFs for oscillations, concentrations and laminates.

An MCF is stored as a finite list of terms, each a product of a spatial
measure (Lebesgue on the torus or a point mass), C^N-weighted z-atoms
(finite, or at infinity on the sphere) and a direction quadrature.  Its
action on (f, Psi) is

    sum_terms S(phi) sum_i sum_k d_k h(z_i) . conj(Psi(xi_k) c_i),

with h replaced by the recession h-infinity on atoms at infinity and the
direction-atom terms scaled by the global constant c_dir.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np

from mcflab.field import Grid, sample_field
from mcflab.fourier import MultiplierSymbol, identity as identity_symbol
from mcflab.testfun import TestIntegrand, identity as identity_integrand

_QUAD_N = 64


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ZAtom:
    location: np.ndarray
    weight: np.ndarray
    at_infinity: bool = False


@dataclass(frozen=True, eq=False)
class Term:
    atoms: tuple
    directions: tuple  # ((xi, d_k), ...)
    spatial: str = "lebesgue"
    x0: np.ndarray | None = None
    scale: complex = 1.0
    directional: bool = True  # c_dir applies


@dataclass(frozen=True, eq=False)
class ClosedFormMCF:
    terms: tuple
    d: int
    N: int
    c_dir: float = 0.5

    def scaled(self, alpha) -> "ClosedFormMCF":
        return replace(self, terms=tuple(replace(t, scale=t.scale * alpha) for t in self.terms))

    @property
    def homogeneous(self) -> bool:
        return all(t.spatial == "lebesgue" for t in self.terms)

    def has_infinity(self) -> bool:
        return any(a.at_infinity for t in self.terms for a in t.atoms)

    # -- JSON -------------------------------------------------------------------

    def to_dict(self) -> dict:
        c = lambda v: [[float(np.real(x)), float(np.imag(x))] for x in np.atleast_1d(v)]
        return {
            "d": self.d,
            "N": self.N,
            "c_dir": self.c_dir,
            "terms": [
                {
                    "spatial": t.spatial,
                    "x0": None if t.x0 is None else np.asarray(t.x0, float).tolist(),
                    "scale": c(t.scale)[0],
                    "directional": t.directional,
                    "atoms": [{"location": c(a.location), "weight": c(a.weight),
                               "at_infinity": a.at_infinity} for a in t.atoms],
                    "directions": [{"xi": np.asarray(xi, float).tolist(), "weight": c(w)[0]}
                                   for xi, w in t.directions],
                }
                for t in self.terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ClosedFormMCF":
        u = lambda pairs: np.array([complex(a, b) for a, b in pairs])
        terms = []
        for t in data["terms"]:
            atoms = tuple(ZAtom(u(a["location"]), u(a["weight"]), a["at_infinity"]) for a in t["atoms"])
            dirs = tuple((np.array(dd["xi"]), complex(*dd["weight"])) for dd in t["directions"])
            terms.append(Term(atoms, dirs, t["spatial"],
                              None if t["x0"] is None else np.array(t["x0"]),
                              complex(*t["scale"]), t["directional"]))
        return cls(tuple(terms), data["d"], data["N"], data["c_dir"])

    @classmethod
    def from_json(cls, text: str) -> "ClosedFormMCF":
        return cls.from_dict(json.loads(text))


def _spatial_factor(term: Term, phi, d: int) -> complex:
    if term.spatial == "point":
        return 1.0 if phi is None else complex(np.asarray(phi(np.atleast_2d(term.x0)))[0])
    if phi is None:
        return 1.0
    g = Grid(d, _QUAD_N)
    return complex(np.mean(phi(g.points())))


def eval_closed_form(mcf: ClosedFormMCF, f: TestIntegrand, symbol: MultiplierSymbol) -> complex:
    if f.N != mcf.N:
        raise ValueError("integrand and MCF act on different C^N")
    total = 0.0 + 0.0j
    for term in mcf.terms:
        if not term.atoms or not term.directions:
            continue
        xis = np.array([np.atleast_1d(xi) for xi, _ in term.directions], dtype=float)
        dk = np.array([w for _, w in term.directions], dtype=complex)
        P = symbol.matrices(xis, mcf.N)  # (K, N, N)
        locs = np.array([a.location for a in term.atoms])
        cs = np.array([a.weight for a in term.atoms])
        inf = np.array([a.at_infinity for a in term.atoms])
        # sum_k d_k conj(Psi(xi_k) c_i) for every atom i: (I, N)
        Pc = np.einsum("kab,ib->kia", P, cs)
        right = np.einsum("k,kia->ia", dk, Pc.conj())
        for pt in f.parts:
            hv = np.zeros(locs.shape, dtype=complex)
            if (~inf).any():
                hv[~inf] = pt.h(locs[~inf])
            if inf.any():
                rec = f._recession_of(pt)
                if rec is None:
                    raise ValueError("atom at infinity needs recession data of the integrand")
                hv[inf] = rec(locs[inf])
            val = np.sum(hv * right)
            val *= pt.weight * _spatial_factor(term, pt.phi, mcf.d) * term.scale
            if term.directional:
                val *= mcf.c_dir
            total += val
    return complex(total)


# -- constructors ----------------------------------------------------------------


def _pm(n0) -> tuple:
    n0 = np.atleast_1d(np.asarray(n0, dtype=float))
    n0 = n0 / np.linalg.norm(n0)
    return ((n0, 1.0), (-n0, 1.0))


def _atoms(nu) -> list:
    out = []
    for z, m in nu:
        if m < 0:
            raise ValueError("Young measure masses must be nonnegative")
        out.append((np.atleast_1d(np.asarray(z, dtype=complex)), float(m)))
    if abs(sum(m for _, m in out) - 1.0) > 1e-9:
        raise ValueError("Young measure masses must sum to 1")
    return out


def oracle_oscillation(nu, Z0, n0, c_dir: float | None = None) -> ClosedFormMCF:
    """L^d (x) [(z - Z0) nu(dz)] (x) delta-bar_{+-n0}."""
    nu = _atoms(nu)
    Z0 = np.atleast_1d(np.asarray(Z0, dtype=complex))
    n0 = np.atleast_1d(np.asarray(n0, dtype=float))
    atoms = tuple(ZAtom(z, m * (z - Z0)) for z, m in nu)
    c = direction_constant() if c_dir is None else c_dir
    return ClosedFormMCF((Term(atoms, _pm(n0)),), n0.size, Z0.size, c)


def oracle_two_state(A, B, theta: float, n0, c_dir: float | None = None) -> ClosedFormMCF:
    A = np.atleast_1d(np.asarray(A, dtype=complex))
    B = np.atleast_1d(np.asarray(B, dtype=complex))
    M = theta * A + (1 - theta) * B
    return oracle_oscillation([(A, theta), (B, 1 - theta)], M, n0, c_dir)


def _direction_weights(a: np.ndarray, b: np.ndarray, d: int, P: int,
                       sphere: int) -> tuple[np.ndarray, np.ndarray]:
    """Sector sums of F[a] conj(F[b]) over lattice frequencies m/P.

    Returns direction unit vectors and weights; the zero frequency is split
    evenly among the directions.
    """
    Fa = np.fft.fftn(a)
    Fb = np.fft.fftn(b)
    M = a.shape[0]
    h = P / M
    prod = (Fa * Fb.conj()) * h ** (2 * d) / P**d
    k = np.fft.fftfreq(M, d=1.0 / M)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
        pos = prod[k > 0].sum()
        neg = prod[k < 0].sum()
        zero = prod[0]
        return dirs, np.array([pos + zero / 2, neg + zero / 2])
    if d != 2:
        raise NotImplementedError("concentration oracle supports d <= 2")
    kx, ky = np.meshgrid(k, k, indexing="ij")
    ang = np.mod(np.arctan2(ky, kx), 2 * np.pi)
    idx = np.floor(ang / (2 * np.pi) * sphere + 0.5).astype(int) % sphere
    zero = (kx == 0) & (ky == 0)
    w = np.bincount(idx[~zero], weights=prod[~zero].real, minlength=sphere) \
        + 1j * np.bincount(idx[~zero], weights=prod[~zero].imag, minlength=sphere)
    w += prod[zero].sum() / sphere
    th = 2 * np.pi * np.arange(sphere) / sphere
    return np.stack([np.cos(th), np.sin(th)], axis=1), w


def concentration_weights(w: Callable, p: float, d: int, sphere: int = 64,
                          radial: int = 1024, rtol: float = 1e-4):
    """Direction weights int_0^inf F[|w|^{p-1}](t eta) conj(w-hat(t eta)) t^{d-1} dt.

    Evaluated as sector sums of the padded-grid transform (padding P, M points
    per unit length); refinement doubles both until the weights settle.
    """
    prev = None
    for level in range(5):
        P = 1 << level
        M = radial * P
        x = (np.arange(M) + 0.5) * (P / M) - P / 2
        pts = np.stack([a.ravel() for a in np.meshgrid(*([x] * d), indexing="ij")], axis=1)
        wv = np.asarray(w(pts), dtype=float).reshape((M,) * d)
        dirs, wts = _direction_weights(np.abs(wv) ** (p - 1), wv, d, P, sphere)
        if prev is not None and np.abs(wts - prev).max() <= rtol * np.abs(wts).sum():
            return dirs, wts
        prev = wts
        if d == 2 and M >= 2048:
            break
    if d == 2:
        return dirs, wts
    raise ValueError("radial quadrature did not converge under refinement")


def oracle_concentration(w: Callable, Z0, p: float, d: int = 1, sphere: int = 64,
                         radial: int = 1024) -> ClosedFormMCF:
    """delta_0 (x) conj(Z0) delta_{infinity Z0} (x) mu-bar; c_dir is not applied."""
    Z0 = np.atleast_1d(np.asarray(Z0, dtype=complex))
    e = Z0 / np.linalg.norm(Z0)
    dirs, wts = concentration_weights(w, p, d, sphere, radial)
    term = Term((ZAtom(e, Z0, True),), tuple((xi, complex(c)) for xi, c in zip(dirs, wts)),
                "point", np.zeros(d), 1.0, False)
    return ClosedFormMCF((term,), d, Z0.size, direction_constant())


def oracle_laminate(omega1: ClosedFormMCF, omega2: ClosedFormMCF, nu1, nu2, A, B,
                    theta: float, n0, c_dir: float | None = None) -> ClosedFormMCF:
    """theta omega1 + (1-theta) omega2 + L^d (x) [mixing atoms] (x) delta-bar_{+-n0}."""
    if not (omega1.homogeneous and omega2.homogeneous):
        raise ValueError("lamination needs homogeneous input MCFs")
    A = np.atleast_1d(np.asarray(A, dtype=complex))
    B = np.atleast_1d(np.asarray(B, dtype=complex))
    X = theta * A + (1 - theta) * B
    atoms = tuple(ZAtom(z, theta * m * (A - X)) for z, m in _atoms(nu1)) + \
        tuple(ZAtom(z, (1 - theta) * m * (B - X)) for z, m in _atoms(nu2))
    c = direction_constant() if c_dir is None else c_dir
    terms = omega1.scaled(theta).terms + omega2.scaled(1 - theta).terms + (Term(atoms, _pm(n0)),)
    return ClosedFormMCF(terms, omega1.d, A.size, c)


def zero_mcf(d: int, N: int) -> ClosedFormMCF:
    return ClosedFormMCF((), d, N, direction_constant())


# -- calibration -----------------------------------------------------------------

_CALIBRATED: dict = {}


def calibrate_direction(grid: Grid | None = None, j_list: Sequence[int] = (32, 64, 128, 256),
                        R_list: Sequence[float] = (2.0, 4.0, 8.0, 16.0)) -> float:
    """Fit c_dir from the sine sequence with f = z.q and Psi = 1.

    The ratio of the empirical pairing to the uncalibrated oracle must land
    within 5% of 1/2 or 1.  The fitted value is stored for later oracles.
    """
    from mcflab.pairing import pairing_limit
    from mcflab.synth import Oscillation, sine

    grid = Grid(1, 4096) if grid is None else grid
    gen = Oscillation(sine(1.0), (1,))
    emp = pairing_limit(identity_integrand(), identity_symbol(), gen, grid, j_list, R_list)
    orc = eval_closed_form(oracle_oscillation(gen.young_atoms(), 0.0, [1.0], c_dir=1.0),
                           identity_integrand(), identity_symbol())
    ratio = (emp.value / orc).real
    if not any(abs(ratio - c) <= 0.05 * c for c in (0.5, 1.0)):
        raise CalibrationError(f"direction constant {ratio} is near neither 1/2 nor 1")
    _CALIBRATED["c_dir"] = float(ratio)
    return float(ratio)


def direction_constant() -> float:
    """The stored c_dir, calibrating on first use."""
    if "c_dir" not in _CALIBRATED:
        calibrate_direction()
    return _CALIBRATED["c_dir"]


def set_direction_constant(c: float) -> None:
    _CALIBRATED["c_dir"] = float(c)
