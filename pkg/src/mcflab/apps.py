"""Relaxation of gradient functionals and singularity transport for semilinear systems."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from mcflab.constraint import DiffOperator, afree_residual, curl, homogeneous_symbol, oscillation_scale
from mcflab.extract import AtomicYoungMeasure, WavefrontSample, cone_mass_fraction, wavefront_scan
from mcflab.field import Grid, SampledField, integrate
from mcflab.fourier import MultiplierSymbol, identity as identity_symbol
from mcflab.pairing import DEFAULT_J, DEFAULT_R, DEFAULT_TOL, EmpiricalPairing, pairing_limit
from mcflab.synth import FieldSequence, SequenceGenerator
from mcflab.testfun import TestIntegrand, ramp

# -- relaxation ---------------------------------------------------------------


@dataclass
class RelaxationReport:
    value: float
    oscillation_part: float
    finite_part: float
    infinity_part: float
    direct: float
    spread: float
    afree: float
    warnings: list = dc_field(default_factory=list)
    cone_masses: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "oscillation_part": self.oscillation_part,
            "finite_part": self.finite_part,
            "infinity_part": self.infinity_part,
            "direct": self.direct,
            "spread": self.spread,
            "afree_residual": self.afree,
            "warnings": list(self.warnings),
            "cone_masses": {k: float(v) for k, v in sorted(self.cone_masses.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _truncated(f: TestIntegrand, K: float) -> TestIntegrand:
    """f restricted to |z| >~ K, which isolates the concentrating part."""

    def h(z):
        return ramp(np.linalg.norm(z, axis=1) / K)[:, None] * f.h(z)

    return TestIntegrand.make(h, f.p, f.N, recession=f.h, name=f"{f.name}-K{K}")


def _direction_grid(d: int, count: int = 16) -> list:
    if d == 1:
        return [(1.0,), (-1.0,)]
    ang = 2 * np.pi * np.arange(count) / count
    return [(float(np.cos(a)), float(np.sin(a))) for a in ang]


def relaxed_functional(f: TestIntegrand, nu: AtomicYoungMeasure, gradu: SampledField,
                       gen: SequenceGenerator, grid: Grid, j_list: Sequence[int] = DEFAULT_J,
                       R_list: Sequence[float] = DEFAULT_R, mode: str = "double-limit",
                       K: float | None = None, op: DiffOperator | None = None,
                       m: int | None = None, afree_tol: float = 1e-2,
                       cone_normals: Sequence | None = None, tol: float = DEFAULT_TOL
                       ) -> RelaxationReport:
    """J-bar = int <h : conj(grad u), nu> + <<f (x) I, omega>>.

    The MCF part is split at |z| ~ K into a finite-z part and the infinity part.
    ``cone_normals`` requests a wavefront scan whose cone masses around each
    listed normal are reported.
    """
    d = grid.d
    m = f.N // d if m is None else m
    op = curl(m, d) if op is None else op
    # oscillation part
    gbar = np.zeros(grid.shape + (1,), dtype=complex)
    for z, mass in nu.atoms:
        gbar = gbar + mass * (f.h(z[None, :])[0] * gradu.values.conj()).sum(axis=-1)[..., None]
    osc = float(integrate(SampledField(grid, gbar)).real)
    pr = pairing_limit(f, identity_symbol(), gen, grid, j_list, R_list, mode, tol=tol)
    if K is None:
        K = 4.0 * max([float(np.linalg.norm(z)) for z, _ in nu.atoms] + [1.0])
    inf = pairing_limit(_truncated(f, K), identity_symbol(), gen, grid, j_list, R_list, mode,
                        tol=tol).value.real
    finite = pr.value.real - inf
    value = osc + finite + inf
    # direct evaluation at the largest j
    u = gen.emit(max(j_list), grid)
    direct = float(np.sum(f.h(u.flat()) * u.flat().conj()).real * grid.cell_volume)
    # gradient structure check
    X = gen.weak_limit(grid)
    shift = TestIntegrand.make(lambda z: z, 2.0, f.N, recession=lambda e: e, name="identity")
    res = afree_residual(shift, homogeneous_symbol(op).adjoint(), gen, op, grid, j_list, R_list,
                         mode, tol)
    scale = oscillation_scale(gen, grid, max(j_list)) if X is not None else 1.0
    notes = []
    if res > afree_tol * max(scale, 1e-300):
        msg = f"sequence is not asymptotically {op.name}-free (residual {res:.3e}, scale {scale:.3e})"
        warnings.warn(msg)
        notes.append(msg)
    cones = {}
    if cone_normals is not None and nu.atoms:
        dirs = _direction_grid(d)
        half = np.pi / len(dirs)
        x0 = [tuple([0.5] * d)]
        z0s = [(z, False) for z, _ in nu.atoms]
        samples = wavefront_scan(gen, grid, x0, z0s, dirs, (0.25, 0.25, half),
                                 j_list=j_list, R_list=R_list, mode=mode, tol=tol)
        for n in cone_normals:
            n = np.asarray(n, float)
            cones[",".join(format(t, ".6g") for t in n)] = cone_mass_fraction(samples, [n, -n], half)
    return RelaxationReport(value, osc, finite, inf, direct, pr.uncertainty, res, notes, cones)


# -- quasiconvex envelope by lamination ----------------------------------------


def _unit_vectors(k: int) -> np.ndarray:
    if k == 1:
        return np.ones((1, 1))
    return np.eye(k)


def _normals(d: int, count: int = 8) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        ang = np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.eye(d)


def qc_envelope_lamination(g: Callable[[np.ndarray], np.ndarray], A, depth: int,
                           normals: np.ndarray | None = None,
                           amplitudes: Sequence[float] = tuple(np.linspace(-1, 1, 9)),
                           vectors: np.ndarray | None = None, chunk: int = 1 << 18) -> float:
    """Iterated rank-one splitting envelope of ``g`` at the matrix A.

    g maps (M, m, d) arrays to (M,) values.  A split at A uses endpoints
    A + s1 a(x)n and A + s2 a(x)n with s1 > 0 > s2 and weights
    theta = -s2/(s1 - s2), 1 - theta, so the barycenter is A.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, d = A.shape
    n = _normals(d) if normals is None else np.atleast_2d(np.asarray(normals, float))
    a = _unit_vectors(m) if vectors is None else np.atleast_2d(np.asarray(vectors, float))
    s = np.asarray(amplitudes, dtype=float)
    s1, s2 = s[s > 0], s[s < 0]
    S1, S2 = np.meshgrid(s1, s2, indexing="ij")
    S1, S2 = S1.ravel(), S2.ravel()
    theta = -S2 / (S1 - S2)
    dirs = np.einsum("ai,nk->anik", a, n).reshape(-1, m, d)  # rank-one directions

    def env(level: int, As: np.ndarray) -> np.ndarray:
        base = np.asarray(g(As), dtype=float)
        if level == 0 or S1.size == 0:
            return base
        out = base.copy()
        per = dirs.shape[0] * S1.size
        step = max(1, chunk // (2 * per * max(1, level)))
        for lo in range(0, As.shape[0], step):
            blk = As[lo:lo + step]
            E1 = blk[:, None, None] + S1[None, None, :, None, None] * dirs[None, :, None]
            E2 = blk[:, None, None] + S2[None, None, :, None, None] * dirs[None, :, None]
            v1 = env(level - 1, E1.reshape(-1, m, d)).reshape(blk.shape[0], -1, S1.size)
            v2 = env(level - 1, E2.reshape(-1, m, d)).reshape(blk.shape[0], -1, S1.size)
            split = theta * v1 + (1 - theta) * v2
            out[lo:lo + step] = np.minimum(base[lo:lo + step], split.reshape(blk.shape[0], -1).min(axis=1))
        return out

    return float(env(depth, A[None])[0])


# -- semilinear transport ---------------------------------------------------------


class TransportError(RuntimeError):
    pass


@dataclass
class TransportRun:
    """u_t - a u_x = g(u) on the 1-torus.

    The linear part is applied exactly in Fourier space; g is integrated by an
    exponential midpoint rule with step 1/(8 max frequency).
    """

    a: float = 1.0
    g: Callable[[np.ndarray], np.ndarray] | None = None
    g_name: str = "zero"
    lipschitz: float = 1.0
    dt: float = 0.0
    steps: int = 0
    snapshots: dict = dc_field(default_factory=dict)

    def descriptor(self) -> dict:
        return {"a": self.a, "g": self.g_name, "lipschitz": self.lipschitz,
                "dt": self.dt, "steps": self.steps, "times": sorted(self.snapshots)}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)


def _max_frequency(values: np.ndarray) -> float:
    c = np.abs(np.fft.fft(values, axis=0)).max(axis=-1)
    k = np.abs(np.fft.fftfreq(values.shape[0], 1.0 / values.shape[0]))
    active = k[c > 1e-12 * max(c.max(), 1e-300)]
    return float(max(active.max(initial=0.0), 1.0))


def transport_solve(run: TransportRun, u0: SampledField, T: float,
                    times: Sequence[float] | None = None) -> dict:
    """Snapshots {t: u(t)} for t in ``times`` (default: T only)."""
    grid = u0.grid
    if grid.d != 1:
        raise ValueError("transport is implemented in one space dimension")
    times = sorted(set(float(t) for t in (times if times is not None else [T])))
    if times and (times[0] < 0 or times[-1] > T + 1e-15):
        raise ValueError("snapshot times must lie in [0, T]")
    k = grid.axis_frequencies()
    prop = lambda tau: np.exp(2j * np.pi * run.a * k * tau)[:, None]
    E = lambda v, tau: np.fft.ifft(prop(tau) * np.fft.fft(v, axis=0), axis=0)
    v0 = np.asarray(u0.values, dtype=complex)
    out = {}
    if run.g is None:
        for t in times:
            out[t] = SampledField(grid, E(v0, t))
        run.dt, run.steps = 0.0, 0
        run.snapshots = out
        return out
    dt_max = 1.0 / (8.0 * _max_frequency(v0))
    norm0 = np.linalg.norm(v0)
    bound = np.exp(2 * run.lipschitz * T) * norm0
    v, t = v0.copy(), 0.0
    steps = 0
    for target in times:
        while target - t > 1e-14:
            h = min(dt_max, target - t)
            half = E(v + 0.5 * h * run.g(v), 0.5 * h)
            v = E(v, h) + h * E(run.g(half), 0.5 * h)
            t += h
            steps += 1
            if not np.isfinite(v).all() or np.linalg.norm(v) > bound * (1 + 1e-12) + 1e-300:
                raise TransportError(f"step instability at t={t:.6g}: norm exceeds e^(2CT)|u0|")
        out[target] = SampledField(grid, v.copy())
    run.dt, run.steps = dt_max, steps
    run.snapshots = out
    return out


def space_time_field(run: TransportRun, u0: SampledField, with_source: bool = True) -> SampledField:
    """(u, g(u)) sampled on the (t, x) torus Grid(2, n) at cell-center times."""
    n = u0.grid.n
    ts = (np.arange(n) + 0.5) / n
    snaps = transport_solve(run, u0, float(ts[-1]), ts)
    u = np.stack([snaps[float(t)].values for t in ts])
    if with_source:
        gv = np.stack([run.g(v) if run.g is not None else np.zeros_like(v) for v in u])
        u = np.concatenate([u, gv], axis=-1)
    return SampledField(Grid(2, n), u)


def write_slices_csv(snaps: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "component", "re", "im"])
        for t in sorted(snaps):
            fld = snaps[t]
            xs = fld.grid.axis_points()
            for i, x in enumerate(xs):
                for c in range(fld.N):
                    v = fld.values[i, c]
                    w.writerow([format(t, ".17g"), format(x, ".17g"), c,
                                format(v.real, ".17g"), format(v.imag, ".17g")])


# -- extended system ----------------------------------------------------------------


def bump_with_gradient(center, width: float) -> tuple[Callable, Callable]:
    """Product bump prod cos^4(pi s / 2w) in periodic offsets s, with its gradient."""
    c = np.atleast_1d(np.asarray(center, dtype=float))

    def parts(x):
        s = np.mod(np.atleast_2d(x) - c + 0.5, 1.0) - 0.5
        inside = np.abs(s) < width
        arg = 0.5 * np.pi * s / width
        b = np.where(inside, np.cos(arg) ** 4, 0.0)
        db = np.where(inside, -4 * np.cos(arg) ** 3 * np.sin(arg) * 0.5 * np.pi / width, 0.0)
        return b, db

    def phi(x):
        return np.prod(parts(x)[0], axis=1)

    def grad(x):
        b, db = parts(x)
        out = np.empty_like(b)
        for k in range(b.shape[1]):
            others = np.prod(np.delete(b, k, axis=1), axis=1) if b.shape[1] > 1 else 1.0
            out[:, k] = db[:, k] * others
        return out

    return phi, grad


def _numerical_jacobian(h: Callable, z: np.ndarray, delta: float = 1e-6) -> np.ndarray:
    m = z.shape[-1]
    J = np.empty(z.shape[:-1] + (m, m), dtype=complex)
    for k in range(m):
        e = np.zeros(m)
        e[k] = delta
        J[..., :, k] = (h(z + e) - h(z - e)) / (2 * delta)
    return J


def commutation_check(A_list: Sequence, Dh: Callable, m: int, samples: int = 16,
                      seed: int = 0, tol: float = 1e-10) -> float:
    """max_k,z |[A^(k)]^* Dh(z) - Dh(z) A^(k)| over seeded sample points."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, m)) * 2.0
    D = Dh(z)
    worst = 0.0
    for A in A_list:
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        diff = np.einsum("ij,sjk->sik", A.conj().T, D) - np.einsum("sij,jk->sik", D, A)
        worst = max(worst, float(np.abs(diff).max() / (1.0 + np.abs(D).max())))
    if worst > tol:
        raise ValueError(f"structural commutation relations violated (defect {worst:.3e})")
    return worst


@dataclass
class ExtendedResidual:
    residual: float
    scale: float
    by_j: dict
    lhs: EmpiricalPairing
    rhs: EmpiricalPairing

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else 0.0

    @property
    def decreasing(self) -> bool:
        v = [self.by_j[j] for j in sorted(self.by_j)]
        return all(b <= a for a, b in zip(v, v[1:]))

    def to_dict(self) -> dict:
        return {"residual": self.residual, "scale": self.scale, "relative": self.relative,
                "by_j": {str(j): v for j, v in sorted(self.by_j.items())},
                "decreasing": self.decreasing}


def extended_system_residual(gen: SequenceGenerator, grid: Grid, phi: Callable, dphi: Callable,
                             h: Callable, A_list: Sequence, psi: MultiplierSymbol | None = None,
                             Dh: Callable | None = None, p: float = 2.0,
                             j_list: Sequence[int] = (8, 16, 32), R_list: Sequence[float] = (2.0, 3.0),
                             tol: float = DEFAULT_TOL) -> ExtendedResidual:
    """|<<(d_t phi - A* phi) h(z1).q1 (x) conj(Psi), omega>> + <<phi [Dh(z1) z2.q1 + h(z1).q2] ...>>|.

    ``gen`` emits U_j = (u_j, g_j(u_j)) in C^(2m) on the (t, x) torus, time first.
    ``A_list`` holds the spatial coefficient matrices A^(k) (m x m).
    """
    if grid.d < 2:
        raise ValueError("the extended system lives on a space-time torus of dimension >= 2")
    m = gen.N // 2
    if len(A_list) != grid.d - 1:
        raise ValueError("need one coefficient matrix per space dimension")
    A_list = [np.atleast_2d(np.asarray(A, dtype=complex)) for A in A_list]
    Dh = Dh if Dh is not None else (lambda z: _numerical_jacobian(h, z))
    commutation_check(A_list, Dh, m)
    psi = identity_symbol() if psi is None else psi
    zeros = lambda z: np.zeros((z.shape[0], m), dtype=complex)

    def lhs_part(M):
        def hh(z):
            v = h(z[:, :m])
            if M is not None:
                v = v @ M.T
            return np.concatenate([v, zeros(z)], axis=1)
        return hh

    # (d_t phi) h(z1) - sum_k (d_k phi) [A^(k)]^* h(z1)
    lhs = TestIntegrand.make(lhs_part(None), p, 2 * m, phi=lambda x: dphi(x)[:, 0], name="lhs-t")
    for k, A in enumerate(A_list):
        part = TestIntegrand.make(lhs_part(A.conj().T), p, 2 * m,
                                  phi=lambda x, k=k: -dphi(x)[:, k + 1], name=f"lhs-{k}")
        lhs = lhs + part

    def rhs_h(z):
        z1, z2 = z[:, :m], z[:, m:]
        return np.concatenate([np.einsum("sij,sj->si", Dh(z1), z2), h(z1)], axis=1)

    rhs = TestIntegrand.make(rhs_h, p, 2 * m, phi=phi, name="rhs")
    L = pairing_limit(lhs, psi, gen, grid, j_list, R_list, "double-limit", tol=tol)
    Rr = pairing_limit(rhs, psi, gen, grid, j_list, R_list, "double-limit", tol=tol)
    by_j = {}
    for j in L.j_list:
        by_j[j] = float(np.mean([abs(L.table[(j, R)] + Rr.table[(j, R)]) for R in L.R_list]))
    U = gen.emit(max(j_list), grid)
    x = grid.points()
    z = U.flat()
    mag = np.linalg.norm(z, axis=1)
    scale = float((np.linalg.norm(lhs.evaluate(x, z), axis=1) * mag).sum() * grid.cell_volume
                  + (np.linalg.norm(rhs.evaluate(x, z), axis=1) * mag).sum() * grid.cell_volume)
    return ExtendedResidual(float(abs(L.value + Rr.value)), scale, by_j, L, Rr)


def transport_sequence(a: float, profile: Callable[[np.ndarray], np.ndarray], n: int,
                       j_list: Sequence[int], g: Callable | None = None, g_name: str = "zero"
                       ) -> FieldSequence:
    """Space-time fields (u_j, g(u_j)) for initial data profile(j x), weak limit 0."""
    fields = {}
    g1 = Grid(1, n)
    for j in j_list:
        u0 = SampledField(g1, profile(j * g1.axis_points())[:, None].astype(complex))
        fields[j] = space_time_field(TransportRun(a, g, g_name), u0)
    grid = Grid(2, n)
    limit = SampledField(grid, np.zeros(grid.shape + (fields[j_list[0]].N,), dtype=complex))
    return FieldSequence(fields, limit, 2.0, freq=lambda j: float(max(abs(a), 1.0) * j))
