import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcflab import oracle
from mcflab.constraint import (
    afree_converse_stat,
    afree_pairing,
    afree_residual,
    apply_bounded,
    constant_rank_check,
    curl,
    custom,
    div,
    eval_symbol,
    homogeneous_symbol,
    kernel_basis,
    oscillation_scale,
    rank_one_test,
    sphere_grid,
    symgrad_annihilator,
    tartar,
    xi_set,
)
from mcflab.field import Grid, lp_norm
from mcflab.scenarios import affine, gradient_laminate
from mcflab.synth import Constant, Damped

G2 = Grid(2, 256)
LIM = {"j_list": (8, 16, 32), "R_list": (2.0, 4.0)}


def test_div_homogeneous_symbol():
    xi = np.array([0.3, -1.2])
    want = 1j * xi / np.linalg.norm(xi)
    assert np.allclose(eval_symbol(div(2), xi, "homogeneous")[0], want, atol=1e-15)


@pytest.mark.parametrize("op", [curl(2, 2), div(2), div(3), tartar(), curl(1, 3)],
                         ids=["curl22", "div2", "div3", "tartar", "curl13"])
def test_symbol_normalizations(op):
    rng = np.random.default_rng(1)
    xi = rng.normal(size=op.d)
    h1 = eval_symbol(op, xi, "homogeneous")
    assert np.allclose(eval_symbol(op, 3 * xi, "homogeneous"), h1, atol=1e-12)
    big = xi / np.linalg.norm(xi) * 1e3 * op.order
    b, h = eval_symbol(op, big, "bounded"), eval_symbol(op, big, "homogeneous")
    assert np.linalg.norm(b - h) / np.linalg.norm(h) < 1e-3
    full = eval_symbol(op, xi, "full")
    assert np.allclose(full / (2 * np.pi * np.linalg.norm(xi)) ** op.order, h1)


def test_symbol_at_zero():
    op = div(2)
    with pytest.raises(ValueError):
        eval_symbol(op, np.zeros(2), "homogeneous")
    assert np.all(eval_symbol(op, np.zeros(2), "bounded") == 0)


def test_operator_needs_coefficients():
    with pytest.raises(ValueError):
        custom({(1, 0): np.zeros((1, 1))}, 2)


def test_curl_kernel_e1():
    K = kernel_basis(curl(2, 2), np.array([1.0, 0.0]))
    assert K.shape == (4, 2)
    want = np.array([np.outer(a, [1.0, 0.0]).ravel() for a in np.eye(2)]).T
    P = K @ K.conj().T
    assert np.allclose(P @ want, want, atol=1e-12)


def test_div_kernel_e1():
    K = kernel_basis(div(2), np.array([1.0, 0.0]))
    assert K.shape == (2, 1)
    assert abs(abs(K[1, 0]) - 1) < 1e-12


def test_injective_kernel_empty():
    op = custom({(1, 0): np.eye(2), (0, 1): np.zeros((2, 2))}, 2)
    op2 = custom({(1, 0): np.eye(2), (0, 1): np.eye(2)[::-1]}, 2)
    assert kernel_basis(op2, np.array([0.6, 0.8])).shape[1] == 0
    assert kernel_basis(op, np.array([1.0, 0.0])).shape[1] == 0


@pytest.mark.parametrize("op,expected", [(curl(2, 2), True), (div(2), True), (div(3), True),
                                         (tartar(), True),
                                         (custom({(1, 0): [[1.0]]}, 2), False)],
                         ids=["curl", "div2", "div3", "tartar", "d1"])
def test_constant_rank(op, expected):
    ok, ranks = constant_rank_check(op, 64)
    assert ok == expected
    if not expected:
        assert set(ranks.tolist()) == {0, 1}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]))
def test_symgrad_kernel(seed, d):
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=d)
    xi /= np.linalg.norm(xi)
    K = kernel_basis(symgrad_annihilator(d), xi)
    a = rng.normal(size=d)
    v = (0.5 * (np.outer(a, xi) + np.outer(xi, a))).ravel()
    assert np.linalg.norm(v - K @ (K.conj().T @ v)) < 1e-10
    assert K.shape[1] == d


def test_sphere_grid():
    assert sphere_grid(1).tolist() == [[1.0], [-1.0]]
    dirs = sphere_grid(2, 16, extra=[[0.6, 0.8]])
    assert dirs.shape == (17, 2) and np.allclose(np.linalg.norm(dirs, axis=1), 1)
    assert sphere_grid(3, 50).shape[1] == 3


@pytest.mark.parametrize("B,expect", [
    (np.outer([1.0, 2.0], [1.0, 0.0]), ([1.0, 2.0], [1.0, 0.0])),
    (np.outer([3.0, -1.0], [0.6, 0.8]), ([3.0, -1.0], [0.6, 0.8])),
])
def test_rank_one_factor(B, expect):
    r = rank_one_test(np.zeros((2, 2)), B)
    assert r is not None and not r.degenerate
    assert np.allclose(np.outer(r.c, r.n0), B)
    assert np.allclose(r.n0, expect[1]) and np.allclose(r.c, expect[0])


def test_rank_two_and_degenerate():
    a, b = np.eye(2)
    assert rank_one_test(np.outer(a, a), np.outer(b, b)) is None
    r = rank_one_test(np.eye(2), np.eye(2))
    assert r.degenerate and np.all(r.c == 0)


PAIRS = [
    (np.zeros((2, 2)), np.outer([1.0, 2.0], [1.0, 0.0]), (1, 0)),
    (np.eye(2), np.eye(2) + np.outer([0.0, 1.0], [1.0, 0.0]), (1, 0)),
    (np.zeros((2, 2)), np.outer([1.0, -1.0], [0.0, 1.0]), (0, 1)),
    (np.outer([1.0, 0.0], [1.0, 0.0]), np.outer([0.0, 1.0], [0.0, 1.0]), (1, 0)),
    (np.zeros((2, 2)), np.eye(2), (1, 0)),
    (np.zeros((2, 2)), np.array([[0.0, 1.0], [-1.0, 0.0]]), (0, 1)),
]


@pytest.mark.parametrize("A,B,m", PAIRS)
def test_hadamard_dichotomy(A, B, m):
    op = curl(2, 2)
    gen = gradient_laminate(A, B, m)
    M = 0.5 * (A + B)
    A0 = homogeneous_symbol(op)
    resid = afree_residual(affine(M, 4), A0.adjoint(), gen, op, G2, **LIM)
    scale = oscillation_scale(gen, G2, 32)
    r1 = rank_one_test(A, B)
    matches = r1 is not None and abs(abs(r1.n0 @ np.asarray(m, float)) - 1) < 1e-12
    assert (resid < 1e-2 * scale) == matches


def test_rank_two_closed_form():
    a, b = np.eye(2)
    A, B = np.outer(a, a), np.outer(b, b)
    op = curl(2, 2)
    M = 0.5 * (A + B)
    pr = afree_pairing(affine(M, 4), homogeneous_symbol(op).adjoint(),
                       gradient_laminate(A, B, (1, 0)), op, G2, **LIM)
    expect = 0.0
    for Z in (A, B):
        for s in (np.array([1.0, 0.0]), np.array([-1.0, 0.0])):
            expect += 0.5 * np.linalg.norm(eval_symbol(op, s, "homogeneous") @ (Z - M).ravel()) ** 2
    assert expect == pytest.approx(1.0)
    assert abs(pr.value) == pytest.approx(oracle.direction_constant() * expect, rel=0.02)


def test_strong_sequence_residual_zero():
    op = curl(2, 2)
    gen = Damped(gradient_laminate(np.zeros((2, 2)), np.eye(2), (1, 0)), 1.0)
    resid = afree_residual(affine(np.zeros(4), 4), homogeneous_symbol(op).adjoint(), gen, op, G2, **LIM)
    assert resid < 1e-2


def test_converse_stats():
    op = curl(2, 2)
    gen = gradient_laminate(np.zeros((2, 2)), np.outer([1.0, 2.0], [1.0, 0.0]), (1, 0))
    mcf, seq = afree_converse_stat(gen, op, G2, **LIM)
    scale = oscillation_scale(gen, G2, 32)
    assert mcf < 1e-2 * scale and seq < 1e-2 * scale
    c = Constant(np.arange(4.0), d=2)
    assert afree_converse_stat(c, op, G2, (1, 2), (2.0,), mode="shortcut") == (0.0, 0.0)


def test_bounded_norm_on_lattice():
    # a single Fourier mode: ||A_b u||_2 = |A_b(k) c|
    g = Grid(2, 32)
    from mcflab.field import sample_field

    k = np.array([3.0, -2.0])
    c = np.array([1.0, 0.5])
    u = sample_field(lambda x: np.exp(2j * np.pi * (x @ k))[:, None] * c, g)
    got = lp_norm(apply_bounded(div(2), u), 2)
    assert got == pytest.approx(np.linalg.norm(eval_symbol(div(2), k, "bounded") @ c), rel=1e-12)


def test_xi_sets():
    curl22 = curl(2, 2)
    n0 = np.array([0.6, 0.8])
    dirs = sphere_grid(2, 64, extra=[n0, -n0])
    xs = xi_set([np.outer([1.0, -2.0], n0).ravel()], curl22, dirs)
    assert len(xs.set()) == 2 and np.allclose(np.abs(xs.set() @ n0), 1)
    assert not xi_set([np.diag([1.0, 2.0]).ravel()], curl22, dirs).members.any()
    v12 = np.array([1.0, 2.0])
    perp = np.array([-2.0, 1.0]) / np.sqrt(5)
    dt = sphere_grid(2, 64, extra=[perp, -perp])
    xt = xi_set([np.concatenate([v12, 3 * v12])], tartar(), dt)
    assert np.allclose(np.abs(xt.set() @ perp), 1) and len(xt.set()) == 2
    with pytest.raises(ValueError):
        xi_set([[1.0, 0, 0, 0], [2.0, 0, 0, 0]], curl22, dirs)
