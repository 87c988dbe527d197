import numpy as np
import pytest
from scipy.integrate import quad

from grushin.domain import Domain
from grushin.nonlinearity import (F_eval, PurePower, check_A1_A5, check_lemma45_monotone,
                                  f_eval, preset)

SQUARE = Domain.rectangle(-1.0, 1.0, -1.0, 1.0)
ADMITTED = [lambda k: PurePower(3.0, k), lambda k: PurePower(1.7, k),
            lambda k: PurePower(6.5, k), lambda k: preset("cubic_quadratic", k),
            lambda k: preset("linear", k)]


def test_power_values():
    nl = PurePower(3.0, 1.0)
    assert f_eval(nl, 0.5, 0.3, 2.0) == 2.0
    assert F_eval(nl, 0.5, -0.7, 2.0) == 1.0


@pytest.mark.parametrize("make", ADMITTED + [lambda k: preset("inconsistent_linear", k)])
def test_primitive_vanishes_at_zero(make):
    nl = make(1.3)
    x = np.linspace(-1, 1, 11)
    assert np.all(F_eval(nl, x, x, np.zeros_like(x)) == 0)


def test_power_sign_and_symmetry():
    nl = PurePower(2.5, 0.7)
    rng = np.random.default_rng(0)
    x, y, xi = rng.uniform(-1, 1, (3, 200))
    xi *= 50
    f = f_eval(nl, x, y, xi)
    assert np.array_equal(np.sign(f[x != 0]), np.sign(xi[x != 0]))
    assert np.array_equal(f_eval(nl, x, y, -xi), -f)
    assert np.array_equal(F_eval(nl, x, y, -xi), F_eval(nl, x, y, xi))


@pytest.mark.parametrize("make", ADMITTED)
def test_primitive_matches_quadrature(make):
    nl = make(1.0)
    rng = np.random.default_rng(5)
    for x, y, xi in zip(rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50), rng.uniform(-5, 5, 50)):
        ref, _ = quad(lambda t: f_eval(nl, x, y, t), 0.0, xi, epsabs=1e-12, epsrel=1e-11)
        assert abs(F_eval(nl, x, y, xi) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_inconsistent_preset_is_not_a_primitive():
    nl = preset("inconsistent_linear", 1.0)
    ref, _ = quad(lambda t: f_eval(nl, 0.5, 0.0, t), 0.0, 2.0)
    assert abs(F_eval(nl, 0.5, 0.0, 2.0) - ref) > 0.1


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown nonlinearity preset"):
        preset("nope", 1.0)


def test_power_requires_p_at_least_one():
    with pytest.raises(ValueError, match="p >= 1"):
        PurePower(0.5, 1.0)


def test_cubic_power_hypotheses():
    rep = check_A1_A5(PurePower(3.0, 1.0, q1=4.0), SQUARE, 2000, seed=3)
    assert rep["A1"].passed and rep["A4_small"].passed and rep["A5"].passed
    assert rep.all_passed
    assert rep.seed == 3 and rep.sample_count == 2000


def test_growth_exponent_needs_room():
    # |xi|^1.5 <= |xi|^(q1-1) + 1 holds for q1 = 2.5 but fails for large xi when q1 = 2.1
    ok = check_A1_A5(PurePower(1.5, 1.0, q1=2.5, C0=1.0), SQUARE, 2000, seed=0)
    assert ok["A1"].passed
    bad = check_A1_A5(PurePower(1.5, 1.0, q1=2.1, C0=1.0), SQUARE, 2000, seed=0)
    assert not bad["A1"].passed
    x, y, xi, fval = bad["A1"].witness
    assert abs(xi) > 1 and abs(fval) > abs(x) ** 2 * (abs(xi) ** 1.1 + 1)


def test_linear_fails_small_limit_with_unit_ratio():
    rep = check_A1_A5(preset("linear", 1.0), SQUARE, 1000, seed=1)
    assert not rep["A4_small"].passed
    assert abs(rep["A4_small"].witness[-1] - 1.0) <= 1e-12
    assert not rep["A4_large"].passed


def test_hypothesis_report_deterministic():
    a = check_A1_A5(preset("cubic_quadratic", 1.0), SQUARE, 1500, seed=8)
    b = check_A1_A5(preset("cubic_quadratic", 1.0), SQUARE, 1500, seed=8)
    assert list(a.rows()) == list(b.rows())
    assert a.all_passed


def test_sample_count_floor():
    with pytest.raises(ValueError):
        check_A1_A5(PurePower(3.0, 1.0), SQUARE, 10)


def test_quotient_monotonicity():
    xi = np.linspace(-20, 20, 801)
    assert check_lemma45_monotone(PurePower(3.0, 1.0), 0.5, 0.1, xi)
    assert check_lemma45_monotone(PurePower(1.0, 1.0), 0.5, 0.1, xi)
    assert not check_lemma45_monotone(preset("inconsistent_linear", 1.0), 0.5, 0.1, xi)
    with pytest.raises(ValueError):
        check_lemma45_monotone(PurePower(3.0, 1.0), 0.5, 0.1, xi[::-1])


def test_scaled_nonlinearity():
    nl = PurePower(3.0, 1.0)
    s = nl.scaled(0.25)
    assert f_eval(s, 0.5, 0.0, 2.0) == 0.25 * f_eval(nl, 0.5, 0.0, 2.0)
    assert F_eval(s, 0.5, 0.0, 2.0) == 0.25 * F_eval(nl, 0.5, 0.0, 2.0)
