import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magweyl.bessel import (bessel_kernel, elliptic_multiplier, near_origin_slope, phase_convolution,
                            product_kernel, radial_profile, reconstruct_check, write_profile_csv)
from magweyl.grid import PLAIN, WEYL, SymbolField, make_grid, sample
from magweyl.symbols import gaussian

orders = st.floats(0.0, 5.0)


def _random_plain(grid, seed):
    rng = np.random.default_rng(seed)
    shape = grid.field_shape(PLAIN)
    return SymbolField(grid, rng.normal(size=shape) + 1j * rng.normal(size=shape), PLAIN)


@pytest.mark.parametrize("d,base", [(1, "x"), (1, "xi"), (2, "x")])
def test_kernel_has_unit_mass(d, base):
    psi = bessel_kernel(1.5, make_grid(d, 16, 3.0), base)
    assert psi.mass() == pytest.approx(1.0, abs=1e-12)


def test_order_zero_is_lattice_delta():
    g = make_grid(1, 16, 2.0)
    psi = bessel_kernel(0.0, g)
    expected = np.zeros(g.n)
    expected[g.n // 2] = 1 / g.h
    assert np.allclose(psi.values, expected, atol=1e-12)


def test_psi2_closed_form_d1():
    g = make_grid(1, 2 ** 14, 40.0)
    psi = bessel_kernel(2.0, g)
    x = g.x_axis()
    # discretization error is O(h) near the cusp
    assert np.abs(psi.values - 0.5 * np.exp(-np.abs(x))).max() < 1e-3


@settings(max_examples=15, deadline=None)
@given(orders, orders)
def test_kernels_form_a_convolution_semigroup(s, t):
    g = make_grid(1, 32, 4.0)
    a, b, c = (bessel_kernel(v, g) for v in (s, t, s + t))
    conv = np.fft.ifft(np.fft.fft(np.fft.ifftshift(a.values)) * np.fft.fft(np.fft.ifftshift(b.values)))
    assert np.allclose(np.fft.fftshift(conv).real * g.h, c.values, atol=1e-10 * np.abs(c.values).max())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2]))
def test_factorization_reconstructs_any_field(s, t, seed, d):
    g = make_grid(d, 8, 2.0)
    f = _random_plain(g, seed)
    # white noise excites the top frequencies, so roundoff scales with the
    # dynamic range of the multiplier <freq_x>^s <freq_xi>^t
    top_x = np.sqrt(1 + d * (np.pi / g.h) ** 2)
    top_xi = np.sqrt(1 + d * (np.pi / g.k) ** 2)
    cond = top_x ** s * top_xi ** t
    assert reconstruct_check(f, s, t) < np.finfo(float).eps * (100 + cond) * np.abs(f.values).max()


def test_multiplier_inverse_and_identity():
    g = make_grid(2, 8, 2.0)
    f = sample(gaussian(2), g, PLAIN)
    assert np.allclose(elliptic_multiplier(f, 0, 0).values, f.values, atol=1e-14)
    back = elliptic_multiplier(elliptic_multiplier(f, 3, 2), -3, -2)
    assert np.allclose(back.values, f.values, atol=1e-12)


def test_product_kernel_is_tensor_product():
    g = make_grid(1, 16, 3.0)
    P = product_kernel(1.0, 2.0, g).values
    px, pk = bessel_kernel(1.0, g, "x").values, bessel_kernel(2.0, g, "xi").values
    assert np.allclose(P, np.outer(px, pk))


def test_convolution_and_reconstruct_validation():
    g = make_grid(1, 8, 2.0)
    with pytest.raises(ValueError, match="plain lattice"):
        reconstruct_check(sample(gaussian(1), g, WEYL), 1, 1)
    with pytest.raises(ValueError, match="different"):
        phase_convolution(sample(gaussian(1), g, PLAIN), sample(gaussian(1), g, WEYL))
    with pytest.raises(ValueError, match="base"):
        bessel_kernel(1.0, g, "y")


def test_slope_fit_rules():
    g = make_grid(2, 256, 2.0)
    assert near_origin_slope(bessel_kernel(2.5, g), 0.1).status.startswith("skipped")
    with pytest.raises(ValueError, match="two lattice steps"):
        near_origin_slope(bessel_kernel(1.0, g), 0.01)
    fit = near_origin_slope(bessel_kernel(1.0, g), 0.05, 0.3)
    assert fit.expected == -1.0 and fit.status == "fitted"
    assert abs(fit.slope - fit.expected) < 0.3


def test_profile_csv(tmp_path):
    g = make_grid(1, 16, 2.0)
    psi = bessel_kernel(1.0, g)
    r, v = radial_profile(psi)
    assert r[0] == 0.0 and len(r) == g.n // 2
    path = write_profile_csv(psi, tmp_path / "p.csv")
    rows = path.read_text().splitlines()
    assert rows[0] == "r,psi" and len(rows) == g.n // 2 + 1
