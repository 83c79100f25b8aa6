import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcflab.testfun import (
    INTEGRANDS,
    TestIntegrand,
    anisotropy,
    battery,
    fp_norm_and_recession,
    identity,
    power,
    s_transform,
    truncation,
    window,
)


def ball_grid(N=1, count=400, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(count, N)) + 1j * rng.normal(size=(count, N))
    r = rng.uniform(0, 0.999, size=count) / np.linalg.norm(w, axis=1)
    return w * r[:, None]


def soft(z):
    return 1.0 / (1.0 + np.abs(z))


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0, 3.7])
@pytest.mark.parametrize("N", [1, 2])
def test_round_trip(q, N):
    g = lambda w: np.cos(w) + w**2
    back = s_transform(s_transform(g, q, "decompactify"), q, "compactify")
    w = ball_grid(N)
    assert np.abs(back(w) - g(w)).max() < 1e-10


def test_identity_compactifies_to_w():
    S = s_transform(lambda z: z, 1.0)
    w = ball_grid()
    assert np.abs(S(w) - w).max() < 1e-14


def test_square_not_in_f2():
    h = lambda z: np.abs(z) ** 2
    S = s_transform(h, 1.0)
    r = np.array([0.9, 0.99, 0.999])[:, None]
    assert np.all(np.diff(np.abs(S(r)[:, 0])) > 0) and abs(S(r)[-1, 0]) > 900
    with pytest.raises(ValueError, match="no recession function"):
        fp_norm_and_recession(TestIntegrand.make(h, 2.0, 1), 16)


def test_sphere_needs_recession():
    S = s_transform(lambda z: z, 1.0)
    with pytest.raises(ValueError):
        S(np.array([[1.0 + 0j]]))


def test_q_must_be_positive():
    with pytest.raises(ValueError):
        s_transform(lambda z: z, 0.0)


def test_identity_norm_and_recession():
    norm, hinf = fp_norm_and_recession(identity(1, 2.0))
    assert norm == pytest.approx(1.0, abs=1e-12)
    e = np.exp(1j * np.linspace(0, 6, 7))[:, None]
    assert np.allclose(hinf(e), e)


def test_bounded_recession_vanishes():
    f = TestIntegrand.make(soft, 2.0, 1, name="soft")
    norm, hinf = fp_norm_and_recession(f, 32)
    e = np.exp(1j * np.linspace(0, 6, 7))[:, None]
    assert np.abs(hinf(e)).max() < 1e-3
    assert norm == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
def test_power_is_homogeneous(p):
    f = power(1, p)
    norm, hinf = fp_norm_and_recession(f, 32)
    e = np.exp(1j * np.linspace(0, 6, 13))[:, None]
    assert np.allclose(hinf(e), f.h(e), atol=1e-14)
    assert np.abs(hinf(e)).max() <= norm * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["identity", "power", "trunc", "window", "soft"]),
       st.integers(0, 2**31 - 1))
def test_growth_bound(kind, seed):
    p = 2.0
    f = {"identity": identity(1, p), "power": power(1, p), "trunc": truncation(2.0),
         "window": window(1.0, 0.4), "soft": TestIntegrand.make(soft, p, 1)}[kind]
    norm, _ = fp_norm_and_recession(f, 48)
    rng = np.random.default_rng(seed)
    z = (rng.normal(size=(200, 1)) + 1j * rng.normal(size=(200, 1))) * 10 ** rng.uniform(-2, 3, (200, 1))
    lhs = np.abs(f.h(z))[:, 0]
    assert np.all(lhs <= norm * (1 + np.abs(z[:, 0])) ** (p - 1) * (1 + 1e-9))


def test_truncation_shape():
    f = truncation(4.0)
    z = np.array([[1.0], [2.0], [3.0], [4.0], [10.0]], dtype=complex)
    assert np.allclose(f.h(z)[:, 0], [0, 0, 1.5, 4.0, 10.0])


def test_window_peak_and_support():
    f = window(1.0, 0.2)
    assert f.h(np.array([[1.0 + 0j]]))[0, 0] == pytest.approx(2.0)
    assert f.h(np.array([[5.0 + 0j]]))[0, 0] == 0


def test_window_at_infinity():
    f = window(1.0, 0.3, at_infinity=True)
    z = np.array([[1e6 + 0j], [-1e6 + 0j]])
    vals = f.h(z)[:, 0] / 1e6
    assert vals[0] == pytest.approx(1.0, abs=1e-5) and vals[1] == 0


def test_anisotropy_value():
    f = anisotropy([1.0, 0.0], 1, 2)
    A = np.array([[2.0, 3.0]], dtype=complex)
    val = np.sum(f.h(A) * A.conj()).real
    assert val == pytest.approx(9.0)


def test_phi_and_algebra():
    f = identity().with_phi(lambda x: 2.0 + x[:, 0])
    x = np.array([[0.25]])
    z = np.array([[1.0 + 1j]])
    assert np.allclose(f.evaluate(x, z), 2.25 * z)
    g = identity() + identity().scale(2.0)
    assert np.allclose(g.h(z), 3 * z)
    with pytest.raises(ValueError):
        f.h(z)


def test_battery():
    fam = battery(2.0, 1, 1, degree=1)
    assert len(fam) == 3 * 4
    assert len({f.name for f in fam}) == len(fam)
    for f in fam[:4]:
        norm, _ = fp_norm_and_recession(f, 24)
        assert 0 < norm <= 1.0 + 1e-12


def test_registry_names():
    assert set(INTEGRANDS) >= {"identity", "power", "truncation", "window", "anisotropy"}
    with pytest.raises(ValueError):
        identity(1, 1.5)
