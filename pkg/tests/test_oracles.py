"""Re-derive the frozen oracle constants symbolically."""

import math

import pytest

sp = pytest.importorskip("sympy")

from test_coefficient import INT_ABS_ATANH, POWER_15_A_HALF  # noqa: E402

x = sp.symbols("x")


def test_int_abs_atanh():
    value = 2 * sp.integrate(sp.atanh(x), (x, 0, 1))
    assert float(value) == pytest.approx(INT_ABS_ATANH, rel=1e-15)
    assert sp.simplify(value - 2 * sp.log(2)) == 0


def test_power_antiderivative_value():
    value = sp.Integral((1 - x**2) ** sp.Rational(-3, 2), (x, 0, sp.Rational(1, 2))).evalf(30)
    assert float(value) == pytest.approx(POWER_15_A_HALF, rel=1e-15)


def test_inverse_square_coefficient_has_nonintegrable_antiderivative():
    # a = (1 - x^2)^2: A blows up like 1 / (4 (1 - x)), so int |A| diverges
    A = sp.integrate(1 / (1 - x**2) ** 2, (x, 0, x))
    assert sp.limit(A * (1 - x), x, 1, "-") == sp.Rational(1, 4)


def test_alpha_star_for_affine_target():
    alpha = -sp.diff((1 - x**2) * sp.diff(2 + x, x), x) / (2 + x)
    assert sp.simplify(alpha - 2 * x / (2 + x)) == 0


def test_c1_overlap():
    assert sp.integrate(x + sp.Rational(3, 10), (x, -1, 1)) == sp.Rational(3, 5)
    assert math.isclose(float(sp.Rational(3, 5)), 0.6)
