import numpy as np
import pytest

from mcflab import fourier, testfun
from mcflab.field import Grid
from mcflab.oracle import (
    CalibrationError,
    ClosedFormMCF,
    Term,
    ZAtom,
    calibrate_direction,
    direction_constant,
    eval_closed_form,
    oracle_concentration,
    oracle_laminate,
    oracle_oscillation,
    oracle_two_state,
    zero_mcf,
)
from mcflab.pairing import pairing_limit
from mcflab.scenarios import TENT_ENERGY, lam2, osc1
from mcflab.synth import tent, two_state

F = testfun.identity()
ONE = fourier.identity()
HALF = fourier.half_space((1.0,))


def test_calibrated_constant():
    # frozen from the sine calibration on n=4096
    assert calibrate_direction() == pytest.approx(0.5, abs=1e-12)
    assert direction_constant() == pytest.approx(0.5, abs=1e-12)


def test_calibration_rejects_bad_grid(monkeypatch):
    import mcflab.oracle as orc

    monkeypatch.setattr(orc, "eval_closed_form", lambda *a: 0.37)
    with pytest.raises(CalibrationError):
        orc.calibrate_direction()
    orc.set_direction_constant(0.5)


def test_zero_mcf():
    z = zero_mcf(1, 1)
    for f in (F, testfun.power(), testfun.window(1.0, 0.3)):
        for s in (ONE, HALF):
            assert eval_closed_form(z, f, s) == 0


def test_linear_and_antilinear():
    mcf = oracle_two_state(2.0, -1.0, 0.3, [1.0])
    f1, f2 = F, testfun.TestIntegrand.make(lambda z: np.sin(z), 2.0, 1)
    alpha = 0.3 - 1.7j
    lhs = eval_closed_form(mcf, f1.scale(alpha) + f2, HALF)
    rhs = alpha * eval_closed_form(mcf, f1, HALF) + eval_closed_form(mcf, f2, HALF)
    assert lhs == pytest.approx(rhs, abs=1e-14)
    assert eval_closed_form(mcf, f2, HALF.scale(alpha)) == pytest.approx(
        np.conj(alpha) * eval_closed_form(mcf, f2, HALF), abs=1e-14)


@pytest.mark.parametrize("A,B,theta", [(1.0, 0.0, 0.5), (2.0, -1.0, 0.3), (1j, 1.0, 0.8)])
def test_two_state_atoms(A, B, theta):
    mcf = oracle_two_state(A, B, theta, [1.0])
    M = theta * A + (1 - theta) * B
    atoms = mcf.terms[0].atoms
    assert atoms[0].weight[0] == pytest.approx(theta * (A - M))
    assert atoms[1].weight[0] == pytest.approx((1 - theta) * (B - M))
    assert abs(sum(a.weight[0] for a in atoms)) < 1e-15
    assert not mcf.has_infinity()


def test_osc1_closed_form():
    mcf = oracle_two_state(1.0, 0.0, 0.5, [1.0])
    assert eval_closed_form(mcf, F, ONE) == pytest.approx(0.25, abs=1e-12)
    assert eval_closed_form(mcf, F, HALF) == pytest.approx(0.125, abs=1e-12)
    uncal = oracle_two_state(1.0, 0.0, 0.5, [1.0], c_dir=1.0)
    assert eval_closed_form(uncal, F, ONE) == pytest.approx(0.5)


def test_oscillation_matches_empirical_half_line():
    g = Grid(1, 4096)
    gen = osc1()
    mcf = oracle_oscillation(gen.young_atoms(), gen.mean(), [1.0])
    emp = pairing_limit(F, HALF, gen, g)
    assert abs(emp.value - eval_closed_form(mcf, F, HALF)) < 1e-2


def test_concentration_oracle():
    mcf = oracle_concentration(tent, 1.0, 2.0, 1)
    assert len(mcf.terms[0].directions) == 2
    assert mcf.has_infinity() and not mcf.homogeneous
    assert abs(eval_closed_form(mcf, F, ONE) - TENT_ENERGY) < 1e-3
    # compactly supported window: no infinity contribution
    assert eval_closed_form(mcf, testfun.window(1.0, 0.3), ONE) == 0


def test_concentration_truncations_converge():
    mcf = oracle_concentration(tent, 1.0, 2.0, 1)
    vals = [eval_closed_form(mcf, testfun.truncation(K), ONE) for K in (1.0, 10.0, 100.0)]
    assert all(abs(v - TENT_ENERGY) < 1e-3 for v in vals)


def test_infinity_atom_needs_recession():
    mcf = oracle_concentration(tent, 1.0, 2.0, 1)
    f = testfun.TestIntegrand.make(lambda z: np.abs(z) ** 2, 2.0, 1)
    with pytest.raises(ValueError):
        eval_closed_form(mcf, f, ONE)


def test_laminate_degenerate_theta():
    om1 = oracle_two_state(1.0, 0.0, 0.5, [1, 0])
    mix = oracle_laminate(om1, zero_mcf(2, 1), [(1.0, 0.5), (0.0, 0.5)], [(-1.0, 1.0)],
                          0.5, -1.0, 1 - 1e-12, [0, 1])
    for atom in mix.terms[-1].atoms:
        assert abs(atom.weight[0]) < 1e-11


def test_laminate_rejects_point_terms():
    conc = oracle_concentration(tent, 1.0, 2.0, 1)
    with pytest.raises(ValueError):
        oracle_laminate(conc, zero_mcf(1, 1), [(0.0, 1.0)], [(0.0, 1.0)], 0.0, 0.0, 0.5, [1.0])


def test_second_order_laminate_coefficients():
    A, B, C, t1, t2 = 1.0, 0.0, -1.0, 0.5, 0.5
    _, orc = lam2()
    M = t1 * A + (1 - t1) * B
    X = t2 * M + (1 - t2) * C
    inner = orc.terms[0]
    assert [a.weight[0] * inner.scale for a in inner.atoms] == pytest.approx(
        [t2 * t1 * (A - M), t2 * (1 - t1) * (B - M)])
    mix = [a.weight[0] for a in orc.terms[-1].atoms]
    assert mix == pytest.approx([t2 * t1 * (M - X), t2 * (1 - t1) * (M - X), (1 - t2) * (C - X)])


def test_laminate_matches_empirical():
    lam, orc = lam2()
    # strip frequency is k=4, so the cutoff has to stay below 2
    g = Grid(2, 512)
    emp = pairing_limit(F, ONE, lam, g, (32, 64), (1.5,))
    want = eval_closed_form(orc, F, ONE)
    assert abs(emp.value - want) <= 0.02 * abs(want)


def test_young_consistency():
    from mcflab.extract import young_measure

    gen = osc1()
    yl = young_measure(gen, Grid(1, 4096), j_list=(64, 128))
    mcf = oracle_two_state(1.0, 0.0, 0.5, [1.0])
    locs = sorted(a.location[0].real for a in mcf.terms[0].atoms)
    assert sorted(z[0].real for z, _ in yl.atoms) == locs
    assert all(m == pytest.approx(0.5) for _, m in yl.atoms)


def test_json_roundtrip():
    for mcf in (oracle_two_state(2.0, 1j, 0.3, [1.0]), oracle_concentration(tent, 1.0, 2.0, 1), lam2()[1]):
        back = ClosedFormMCF.from_json(mcf.to_json())
        assert back.to_json() == mcf.to_json()
        assert eval_closed_form(back, F, ONE) == eval_closed_form(mcf, F, ONE)


def test_hand_built_term():
    t = Term((ZAtom(np.array([2.0]), np.array([1.0])),), ((np.array([1.0]), 1.0),), directional=False)
    mcf = ClosedFormMCF((t,), 1, 1)
    assert eval_closed_form(mcf, F, ONE) == pytest.approx(2.0)
    assert eval_closed_form(mcf.scaled(3.0), F, ONE) == pytest.approx(6.0)
