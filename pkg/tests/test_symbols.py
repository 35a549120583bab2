import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magweyl.symbols import (bracket_power, constant, dilated_gaussian, from_sympy, gaussian,
                             position_only)

pts = st.floats(-3, 3, allow_nan=False)


def _fd(F, alpha, beta, x, xi, eps=1e-5):
    """Central difference of one first-order derivative."""
    x, xi = list(x), list(xi)
    j = (list(alpha) + list(beta)).index(1)
    target = x if j < len(x) else xi
    jj = j % len(x)
    up, dn = list(target), list(target)
    up[jj] += eps
    dn[jj] -= eps
    if target is x:
        return (F(up, xi) - F(dn, xi)) / (2 * eps)
    return (F(x, up) - F(x, dn)) / (2 * eps)


@settings(max_examples=30, deadline=None)
@given(pts, pts, pts, pts)
def test_gaussian_first_derivatives_match_finite_differences(x1, x2, p1, p2):
    F = gaussian(2, a=0.7, c=0.3, x0=[0.2, -0.1], xi0=[0.5, 0.0])
    x, xi = [x1, x2], [p1, p2]
    for al, be in [((1, 0), (0, 0)), ((0, 1), (0, 0)), ((0, 0), (1, 0)), ((0, 0), (0, 1))]:
        assert F.derivative(al, be, x, xi) == pytest.approx(_fd(F, al, be, x, xi), abs=1e-8)


def test_gaussian_second_derivative_closed_form():
    F = gaussian(1, a=0.5)
    u = np.linspace(-2, 2, 9)
    expected = (u ** 2 - 1) * np.exp(-0.5 * u ** 2)
    assert np.allclose(F.derivative((2,), (0,), (u,), (0.0,)), expected)


def test_derivative_order_guard():
    with pytest.raises(ValueError, match="exceeds"):
        gaussian(1).derivative((41,), (0,), (0.0,), (0.0,))
    with pytest.raises(ValueError, match="length"):
        gaussian(2).derivative((1,), (0,), (0.0, 0.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        position_only(lambda x: x[0], 1).derivative((1,), (0,), (0.0,), (0.0,))


def test_constant_and_position_only():
    c = constant(2 + 1j, 1)
    assert c((np.zeros(3),), (0.0,)).tolist() == [2 + 1j] * 3
    assert c.derivative((1,), (0,), (0.0,), (0.0,)) == 0
    v = position_only(lambda x: x[0] ** 2, 1)
    assert v((np.array([2.0]),), (np.array([5.0]),))[0] == 4.0


def test_shift_scale_conjugate():
    F = gaussian(1, amplitude=1j)
    G = F.shifted([1.0], [0.5])
    assert G((1.0,), (0.5,)) == pytest.approx(F((2.0,), (1.0,)))
    assert F.scaled(3)((0.0,), (0.0,)) == pytest.approx(3j)
    assert F.conjugate()((0.0,), (0.0,)) == pytest.approx(-1j)


def test_dilated_gaussian_family():
    F = dilated_gaussian(1, 4.0)
    assert F.family == "dilated_gaussian"
    assert F((0.5,), (0.0,)) == pytest.approx(np.exp(-1.0))


def test_sympy_symbol_derivatives():
    F = from_sympy("x1**2*xi1", 1)
    assert F.derivative((1,), (1,), (3.0,), (7.0,)) == pytest.approx(6.0)
    B = bracket_power(2.0, 1)
    assert B((0.0,), (np.array([3.0]),))[0] == pytest.approx(10.0)
    assert B.derivative((0,), (1,), (0.0,), (np.array([3.0]),))[0] == pytest.approx(6.0)
