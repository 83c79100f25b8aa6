import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcflab import fourier, testfun
from mcflab.field import Grid, sample_field
from mcflab.pairing import (
    ConvergenceError,
    SpatialDensity,
    agree,
    check_limits,
    lambda_omega,
    pairing_limit,
    pairing_raw,
)
from mcflab.scenarios import TENT_ENERGY, conc1, osc1, sin1
from mcflab.synth import Constant, Damped, Oscillation, sine, two_state

G = Grid(1, 4096)
F = testfun.identity()
ONE = fourier.identity()
HALF = fourier.half_space((1.0,))


def test_osc1_raw():
    u = osc1().emit(64, G)
    assert abs(pairing_raw(F, ONE, u, 4.0) - 0.25) < 1e-2


def test_damped_raw_vanishes():
    u = sample_field(lambda x: np.sin(2 * np.pi * 64 * x[:, 0]) / 64, G)
    assert abs(pairing_raw(F, ONE, u, 4.0)) < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(8, 256), st.sampled_from([2.0, 3.0, 8.0]), st.floats(0.1, 0.9))
def test_holder_bound(j, R, theta):
    u = Oscillation(two_state(1.0, -0.5, theta)).emit(j, G)
    val, bound = pairing_raw(testfun.power(1, 2.0), HALF, u, R, with_bound=True)
    assert abs(val) <= bound * (1 + 1e-12)


def test_raw_dimension_and_radius_errors():
    u = osc1().emit(8, Grid(1, 64))
    with pytest.raises(ValueError):
        pairing_raw(testfun.identity(2), ONE, u, 2.0)
    with pytest.raises(ValueError):
        pairing_raw(F, ONE, u, 16.0)


@pytest.mark.parametrize("symbol,expected", [(ONE, 0.25), (HALF, 0.125)])
def test_osc1_limit(symbol, expected):
    pr = pairing_limit(F, symbol, osc1(), G)
    assert abs(pr.value - expected) < 1e-2
    assert pr.converged and pr.spread >= 0
    assert set(pr.table) == {(j, R) for j in (32, 64, 128, 256) for R in (2.0, 4.0, 8.0, 16.0)}


@pytest.mark.parametrize("symbol,expected", [(ONE, 0.5), (HALF, 0.25)])
def test_sin_limit(symbol, expected):
    pr = pairing_limit(F, symbol, sin1(), G)
    assert abs(pr.value - expected) < 1e-2


def test_conc1_limit():
    pr = pairing_limit(F, ONE, conc1(), Grid(1, 1 << 15), (256, 1024), (2.0, 4.0))
    assert abs(pr.value.real / TENT_ENERGY - 1) < 0.02


@pytest.mark.parametrize("gen", [osc1(), sin1(), Oscillation(two_state(2.0, -1.0, 0.3))],
                         ids=["osc1", "sin", "skew"])
def test_shortcut_agrees(gen):
    a = pairing_limit(F, HALF, gen, G, mode="double-limit")
    b = pairing_limit(F, HALF, gen, G, mode="shortcut")
    assert agree(a, b)


def test_eta_independence_osc1():
    a = pairing_limit(F, ONE, osc1(), G, eta=fourier.RAISED_COSINE)
    b = pairing_limit(F, ONE, osc1(), G, eta=fourier.SMOOTH_STEP)
    assert agree(a, b)


def test_inner_weight_exchange():
    phi = lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x[:, 0])
    a = pairing_limit(F.with_phi(phi), HALF, sin1(), G)
    b = pairing_limit(F, HALF, sin1(), G, inner=phi)
    assert agree(a, b)
    with pytest.raises(ValueError):
        pairing_limit(F, HALF, sin1(), G, mode="shortcut", inner=phi)


def test_strong_convergence_zero():
    pr = pairing_limit(F, ONE, Damped(sin1(), 1.0), G)
    assert abs(pr.value) < 1e-2


@pytest.mark.parametrize("j_list,R_list,msg", [
    ((64, 32), (2.0,), "increasing"),
    ((32,), (2.0,), "increasing"),
    ((32, 64), (1.0,), "exceed 1"),
    ((32, 64), (2.0, 2048.0), "grid resolution"),
    ((32, 64), (20.0,), "half the lowest"),
    ((32, 2048), (2.0,), "Nyquist"),
])
def test_limit_preconditions(j_list, R_list, msg):
    with pytest.raises(ValueError, match=msg):
        check_limits(osc1(), G, j_list, R_list, "double-limit")


def test_nonconvergence_carries_table():
    # an R larger than most of the spectrum keeps changing with j
    gen = Oscillation(sine(1.0), (1,))
    u = {8: gen.emit(8, G), 16: Oscillation(sine(3.0)).emit(16, G)}
    with pytest.raises(ConvergenceError) as info:
        pairing_limit(F, ONE, gen, G, (8, 16), (2.0,), fields=u)
    assert (16, 2.0) in info.value.table


def test_csv_and_json(tmp_path):
    pr = pairing_limit(F, ONE, osc1(), G)
    pr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "j,R,re,im" and len(lines) == 17
    d = json.loads(pr.to_json())
    assert d["mode"] == "double-limit" and d["value"][0] == pytest.approx(0.25, abs=1e-2)


def test_lambda_osc1_uniform():
    dens = lambda_omega(osc1(), G, bins=16)
    assert isinstance(dens, SpatialDensity)
    assert np.allclose(dens.values, 0.5, rtol=0.02)


def test_lambda_conc1_peak():
    g = Grid(1, 1 << 15)
    dens = lambda_omega(conc1(), g, j_list=(256, 1024), bins=16)
    assert dens.total_mass == pytest.approx(TENT_ENERGY, rel=0.02)
    assert dens.masses[dens.bin_of((0.0,))] >= 0.95 * dens.total_mass


def test_lambda_constant():
    dens = lambda_omega(Constant(1.5 - 2j), Grid(1, 256), j_list=(1, 2), bins=8)
    assert np.allclose(dens.values, 6.25)


def test_lambda_csv(tmp_path):
    dens = lambda_omega(osc1(), G, bins=8)
    dens.to_csv(tmp_path / "l.csv")
    rows = (tmp_path / "l.csv").read_text().splitlines()
    assert rows[0] == "x1,density,mass" and rows[1].startswith("0,")
