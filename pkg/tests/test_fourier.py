import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcflab.field import Grid, SampledField, dft, lp_norm, sample_field
from mcflab.fourier import (
    RAISED_COSINE,
    SMOOTH_STEP,
    apply_multiplier,
    cone_cutoff,
    constant_matrix,
    half_space,
    identity,
    lattice_operator_norm,
    two_point,
)
from mcflab.synth import Oscillation, sine


def sin_field(grid, j):
    return sample_field(lambda x: np.sin(2 * np.pi * j * x[:, 0]), grid)


@pytest.mark.parametrize("profile", [RAISED_COSINE, SMOOTH_STEP])
def test_cutoff_profile_shape(profile):
    t = np.linspace(0, 3, 301)
    v = profile(t)
    assert np.all(v[t <= 1] == 1) and np.all(v[t >= 2] == 0)
    assert np.all(np.diff(v) <= 1e-15)
    assert np.all((v >= 0) & (v <= 1))
    for R in (1.0, 4.0, 100.0):
        assert profile.scaled(R, np.array([0.0]))[0] == 1.0


def test_raised_cosine_formula():
    t = np.linspace(1, 2, 11)
    assert np.allclose(RAISED_COSINE(t), np.cos(np.pi * (t - 1) / 2) ** 2, atol=1e-15)


def test_highpass_beyond_support_is_zero():
    g = Grid(1, 256)
    u = sin_field(g, 5)
    out = apply_multiplier(identity(), u, "highpass", R=20.0)
    assert np.abs(out.values).max() < 1e-14


def test_half_line_on_sine():
    g, j = Grid(1, 128), 9
    out = apply_multiplier(half_space([1.0]), sin_field(g, j))
    c = dft(out).coeffs[:, 0]
    freqs = g.axis_frequencies()
    assert abs(c[freqs == j][0] - 1 / 2j) < 1e-14
    assert np.abs(c[freqs != j]).max() < 1e-14


def test_bandlimit_below_frequency_is_zero():
    g = Grid(1, 256)
    out = apply_multiplier(identity(), sin_field(g, 40), "bandlimit", R=10.0)
    assert np.abs(out.values).max() < 1e-14


def test_highpass_rejects_nyquist():
    g = Grid(1, 64)
    with pytest.raises(ValueError, match="cutoff exceeds grid resolution"):
        apply_multiplier(identity(), sin_field(g, 3), "highpass", R=32.0)


def test_zero_bin_handling():
    g = Grid(1, 32)
    c = sample_field(lambda x: 2.0 + 0 * x[:, 0], g)
    assert np.abs(apply_multiplier(identity(), c).values).max() < 1e-14
    assert np.allclose(apply_multiplier(identity(), c, "bandlimit", R=2.0).values, 2.0)


def test_matrix_symbol_dimension_check():
    g = Grid(1, 16)
    with pytest.raises(ValueError):
        apply_multiplier(constant_matrix(np.eye(2)), sin_field(g, 1))


def test_two_point_matrix_symbol():
    g = Grid(1, 64)
    P, M = np.array([[0, 1], [1, 0]]), np.eye(2)
    u = sample_field(lambda x: np.stack([np.cos(2 * np.pi * 3 * x[:, 0]),
                                         np.sin(2 * np.pi * 3 * x[:, 0])], -1), g)
    out = apply_multiplier(two_point(P, M), u)
    c, cu = dft(out).coeffs, dft(u).coeffs
    pos = g.axis_frequencies() > 0
    assert np.allclose(c[pos], cu[pos][:, ::-1], atol=1e-14)
    assert np.allclose(c[~pos], cu[~pos], atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_operator_bound_parseval(seed):
    rng = np.random.default_rng(seed)
    g = Grid(2, 16)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    sym = half_space([1.0, 0.3], 0.2).compose(constant_matrix(A))
    u = SampledField(g, rng.normal(size=(16, 16, 2)) + 1j * rng.normal(size=(16, 16, 2)))
    bound = lattice_operator_norm(sym, g, 2)
    assert lp_norm(apply_multiplier(sym, u), 2) <= bound * lp_norm(u, 2) * (1 + 1e-12)


def test_commutation_decay():
    g = Grid(2, 256)
    phi = sample_field(lambda x: 2 + np.cos(2 * np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1]), g)
    sym = cone_cutoff([1.0, 1.0], 0.6)
    gen = Oscillation(sine(), (1, 1))
    rel = []
    for j in (4, 8, 16, 32):
        u = gen.emit(j, g)
        comm = phi * apply_multiplier(sym, u) - apply_multiplier(sym, phi * u)
        rel.append(lp_norm(comm, 2) / lp_norm(u, 2))
    assert all(b < a for a, b in zip(rel, rel[1:]))
    assert rel[-1] < 0.05


def test_band_limit_compactness():
    g = Grid(1, 512)
    u = sample_field(lambda x: np.cos(2 * np.pi * x[:, 0]), g)
    errs = []
    for j in (16, 32, 64):
        uj = u + sin_field(g, j)
        errs.append(lp_norm(apply_multiplier(identity(), uj, "bandlimit", R=4.0)
                            - apply_multiplier(identity(), u, "bandlimit", R=4.0), 2))
    assert max(errs) < 1e-13


def test_bandlimit_tends_to_identity():
    g = Grid(1, 512)
    u = sample_field(lambda x: np.exp(np.cos(2 * np.pi * x[:, 0])) - 1.2660658777520082, g)
    errs = [lp_norm(apply_multiplier(identity(), u, "bandlimit", R=R) - u, 2) for R in (1.0, 2.0, 4.0, 8.0, 16.0)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-10


def test_symbol_scale_adjoint():
    g = Grid(1, 32)
    u = sin_field(g, 2)
    sym = half_space([1.0])
    a = apply_multiplier(sym.scale(3.0), u)
    b = apply_multiplier(sym, u) * 3.0
    assert np.allclose(a.values, b.values, atol=1e-14)
    M = np.array([[1, 2j], [0, 1]])
    adj = constant_matrix(M).adjoint()
    xi = np.array([[1.0]])
    assert np.allclose(adj.matrices(xi, 2)[0], M.conj().T)
