"""Constant-coefficient differential operators, their symbols and kernels.

An operator of order s is given by real coefficient matrices A^(alpha) in
R^{l x N} for |alpha| = s.  Symbols:

    A(xi)   = sum_alpha A^(alpha) (2 pi i xi)^alpha
    A_0(xi) = A(xi) / (2 pi |xi|)^s
    A_b(xi) = A(xi) / (1 + 4 pi^2 |xi|^2)^{s/2}

Matrix-valued fields are flattened row-major: entry (i, j) of an m x d
matrix sits at index i*d + j.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from mcflab.field import Grid, SampledField, lp_norm
from mcflab.fourier import MultiplierSymbol, apply_lattice_multiplier
from mcflab.pairing import DEFAULT_TOL, EmpiricalPairing, pairing_limit
from mcflab.synth import SequenceGenerator
from mcflab.testfun import TestIntegrand, identity

COS_THRESHOLD = 1 - 1e-8


@dataclass(frozen=True, eq=False)
class DiffOperator:
    order: int
    coeffs: dict  # multi-index tuple -> (l, N) real array
    d: int
    N: int
    l: int
    name: str = "custom"
    kernel_family: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kernel_family is None:
            if not self.coeffs or not any(np.any(c) for c in self.coeffs.values()):
                raise ValueError("operator needs at least one nonzero coefficient")
            for alpha, c in self.coeffs.items():
                if len(alpha) != self.d or sum(alpha) != self.order:
                    raise ValueError(f"multi-index {alpha} does not have order {self.order}")
                if np.shape(c) != (self.l, self.N):
                    raise ValueError(f"coefficient {alpha} has shape {np.shape(c)}")

    @property
    def scale(self) -> float:
        if not self.coeffs:
            return 1.0
        return max(float(np.linalg.norm(c, 2)) for c in self.coeffs.values())

    def descriptor(self) -> dict:
        return {"name": self.name, "order": self.order, "d": self.d, "N": self.N, "l": self.l}


def custom(coeffs: dict, d: int, name: str = "custom") -> DiffOperator:
    coeffs = {tuple(a): np.atleast_2d(np.asarray(c, dtype=float)) for a, c in coeffs.items()}
    first = next(iter(coeffs.values()))
    order = sum(next(iter(coeffs)))
    return DiffOperator(order, coeffs, d, first.shape[1], first.shape[0], name)


def curl(m: int, d: int) -> DiffOperator:
    """Components (i, j, k) -> d_j w_ik - d_k w_ij for w in R^{m x d}."""
    N, l = m * d, m * d * d
    coeffs = {}
    for r in range(d):
        A = np.zeros((l, N))
        for i in range(m):
            for j in range(d):
                for k in range(d):
                    row = i * d * d + j * d + k
                    if r == j:
                        A[row, i * d + k] += 1.0
                    if r == k:
                        A[row, i * d + j] -= 1.0
        coeffs[tuple(np.eye(d, dtype=int)[r])] = A
    return DiffOperator(1, coeffs, d, N, l, "curl")


def div(d: int) -> DiffOperator:
    coeffs = {tuple(np.eye(d, dtype=int)[r]): np.eye(d)[r][None, :] for r in range(d)}
    return DiffOperator(1, coeffs, d, d, 1, "div")


def tartar() -> DiffOperator:
    """(d1 u1 + d2 u2, d1 u3 + d2 u4) on R^4-valued fields in d=2."""
    A1 = np.zeros((2, 4))
    A2 = np.zeros((2, 4))
    A1[0, 0] = A2[0, 1] = A1[1, 2] = A2[1, 3] = 1.0
    return DiffOperator(1, {(1, 0): A1, (0, 1): A2}, 2, 4, 2, "tartar")


def symgrad_annihilator(d: int) -> DiffOperator:
    """Annihilator of symmetric gradients, given through its kernel family {a . xi}."""

    def family(xi):
        xi = np.asarray(xi, dtype=float)
        vecs = [0.5 * (np.outer(e, xi) + np.outer(xi, e)).ravel() for e in np.eye(d)]
        return np.array(vecs).T

    return DiffOperator(2, {}, d, d * d, 0, "symgrad-annihilator", family)


OPERATORS = {
    "curl": curl,
    "div": div,
    "tartar": lambda: tartar(),
    "symgrad-annihilator": symgrad_annihilator,
}


def eval_symbol(op: DiffOperator, xi, kind: str = "full") -> np.ndarray:
    """Symbol at one frequency (returns (l, N)) or many (returns (M, l, N))."""
    if not op.coeffs:
        raise NotImplementedError(f"{op.name} is defined through its kernel family only")
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    r = np.linalg.norm(xi, axis=1)
    out = np.zeros((xi.shape[0], op.l, op.N), dtype=complex)
    for alpha, A in op.coeffs.items():
        mono = np.prod((2j * np.pi * xi) ** np.asarray(alpha), axis=1)
        out += mono[:, None, None] * A
    if kind == "full":
        if np.any(r == 0):
            raise ValueError("full symbol requested at xi = 0")
    elif kind == "homogeneous":
        if np.any(r == 0):
            raise ValueError("homogeneous symbol undefined at xi = 0")
        out /= ((2 * np.pi * r) ** op.order)[:, None, None]
    elif kind == "bounded":
        out /= ((1 + 4 * np.pi**2 * r**2) ** (op.order / 2))[:, None, None]
    else:
        raise ValueError(f"unknown symbol kind {kind!r}")
    return out[0] if single else out


def kernel_basis(op: DiffOperator, xi, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of ker A_0(xi).

    Singular values below tol * max(sigma_max, coefficient scale) count as zero.
    """
    xi = np.asarray(xi, dtype=float)
    if op.kernel_family is not None:
        F = np.asarray(op.kernel_family(xi / np.linalg.norm(xi)), dtype=complex)
        U, s, _ = np.linalg.svd(F, full_matrices=False)
        return U[:, s > tol * max(s.max(initial=0.0), 1.0)]
    S = eval_symbol(op, xi, "homogeneous")
    _, s, Vh = np.linalg.svd(S, full_matrices=True)
    thresh = tol * max(s.max(initial=0.0), op.scale)
    rank = int(np.sum(s > thresh))
    return Vh[rank:].conj().T


def sphere_grid(d: int, count: int = 64, extra: Sequence | None = None) -> np.ndarray:
    """Unit directions: {+1,-1} in d=1, equispaced angles in d=2, Fibonacci points in d=3."""
    if d == 1:
        pts = np.array([[1.0], [-1.0]])
    elif d == 2:
        th = 2 * np.pi * np.arange(count) / count
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        th = np.pi * (1 + 5**0.5) * i
        rr = np.sqrt(1 - z**2)
        pts = np.stack([rr * np.cos(th), rr * np.sin(th), z], axis=1)
    if extra is not None:
        ex = np.atleast_2d(np.asarray(extra, dtype=float))
        pts = np.concatenate([pts, ex / np.linalg.norm(ex, axis=1, keepdims=True)])
    return pts


def constant_rank_check(op: DiffOperator, samples: int = 64) -> tuple[bool, np.ndarray]:
    if op.d >= 2 and samples < 16:
        raise ValueError("need at least 16 sphere samples in d >= 2")
    dirs = sphere_grid(op.d, samples)
    ranks = np.array([kernel_basis(op, xi).shape[1] for xi in dirs])
    return bool(np.all(ranks == ranks[0])), ranks


def homogeneous_symbol(op: DiffOperator) -> MultiplierSymbol:
    """A_0 as an (l x N) multiplier symbol."""
    return MultiplierSymbol(lambda xi: eval_symbol(op, xi, "homogeneous"), (op.l, op.N),
                            f"A0[{op.name}]", 99)


def kernel_projection(op: DiffOperator) -> MultiplierSymbol:
    """Orthogonal projection onto ker A_0(xi), the projection-family symbol."""

    def fn(xi):
        out = np.empty((xi.shape[0], op.N, op.N), dtype=complex)
        for i, x in enumerate(xi):
            K = kernel_basis(op, x)
            out[i] = K @ K.conj().T
        return out

    return MultiplierSymbol(fn, (op.N, op.N), f"P-ker[{op.name}]", 0)


def afree_pairing(f: TestIntegrand, psi: MultiplierSymbol, gen: SequenceGenerator, op: DiffOperator,
                  grid: Grid, j_list, R_list, mode: str = "double-limit",
                  tol: float = DEFAULT_TOL) -> EmpiricalPairing:
    """<<f (x) conj(Psi A_0), omega>> with Psi of shape (N x l)."""
    if not psi.is_scalar and psi.shape[1] != op.l:
        raise ValueError(f"Psi must map C^{op.l} to C^N, has shape {psi.shape}")
    composed = psi.compose(homogeneous_symbol(op))
    return pairing_limit(f, composed, gen, grid, j_list, R_list, mode, tol=tol)


def afree_residual(f, psi, gen, op, grid, j_list, R_list, mode="double-limit",
                   tol: float = DEFAULT_TOL) -> float:
    return abs(afree_pairing(f, psi, gen, op, grid, j_list, R_list, mode, tol).value)


def apply_bounded(op: DiffOperator, u: SampledField) -> SampledField:
    """A_b applied on the lattice, realizing the W^{-s,p} norm of A u at p = 2."""
    return apply_lattice_multiplier(lambda k: eval_symbol(op, k, "bounded"), u)


def afree_converse_stat(gen: SequenceGenerator, op: DiffOperator, grid: Grid, j_list, R_list,
                        mode: str = "double-limit", tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(|<<z.q (x) conj(A_0* A_0), omega>>|, ||A_b u_j||_2 at the largest j)."""
    if gen.p != 2:
        raise ValueError("converse statistic is defined for p = 2")
    A0 = homogeneous_symbol(op)
    sym = A0.adjoint().compose(A0)
    mcf = abs(pairing_limit(identity(op.N), sym, gen, grid, j_list, R_list, mode, tol=tol).value)
    seq = lp_norm(apply_bounded(op, gen.emit(max(j_list), grid)), 2)
    return float(mcf), float(seq)


def oscillation_scale(gen: SequenceGenerator, grid: Grid, j: int) -> float:
    """||u_j - u||_2^2, the energy scale of the oscillating part."""
    return lp_norm(gen.emit(j, grid) - gen.weak_limit(grid), 2) ** 2


class RankOne(NamedTuple):
    c: np.ndarray
    n0: np.ndarray
    degenerate: bool


def rank_one_test(A, B, tol: float = 1e-10) -> RankOne | None:
    """Factor B - A = c (x) n0 when its rank is at most one."""
    D = np.atleast_2d(np.asarray(B, dtype=float) - np.asarray(A, dtype=float))
    U, s, Vh = np.linalg.svd(D)
    if s[0] <= tol:
        return RankOne(np.zeros(D.shape[0]), np.eye(D.shape[1])[0], True)
    if s.size > 1 and s[1] > tol * s[0]:
        return None
    c, n0 = s[0] * U[:, 0], Vh[0]
    lead = n0[np.argmax(np.abs(n0) > 1e-12)]
    if lead < 0:
        c, n0 = -c, -n0
    return RankOne(c, n0, False)


@dataclass
class XiSet:
    directions: np.ndarray
    cosines: np.ndarray
    members: np.ndarray = dc_field(default=None)

    def __post_init__(self):
        if self.members is None:
            self.members = self.cosines > COS_THRESHOLD

    @property
    def margins(self) -> np.ndarray:
        return self.cosines

    def set(self) -> np.ndarray:
        return self.directions[self.members]


def xi_set(Z_basis, op: DiffOperator, directions: np.ndarray) -> XiSet:
    """Directions where span Z meets ker A_0(xi), by principal angles."""
    Z = np.atleast_2d(np.asarray(Z_basis, dtype=complex))
    Q, Rm = np.linalg.qr(Z.T)
    if np.any(np.abs(np.diag(Rm)) < 1e-12):
        raise ValueError("Z basis is linearly dependent")
    cos = np.zeros(len(directions))
    for i, xi in enumerate(directions):
        K = kernel_basis(op, xi)
        if K.shape[1]:
            cos[i] = np.linalg.svd(Q.conj().T @ K, compute_uv=False).max()
    return XiSet(np.asarray(directions), cos)
