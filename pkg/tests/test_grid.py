import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magweyl.grid import (PLAIN, WEYL, PhaseGrid, PhasePoint, SymbolField, fourier_multiplier,
                          hoermander_seminorm, lp_norm, make_grid, multi_indices, sample,
                          spectral_derivative, symplectic_form)
from magweyl.symbols import bracket_power, gaussian

finite = st.floats(-10, 10, allow_nan=False)


def test_grid_constants():
    g = make_grid(1, 16, 4.0)
    assert g.h == pytest.approx(0.5)
    assert g.k == pytest.approx(np.pi / 4)
    assert g.h * g.k * g.n == pytest.approx(2 * np.pi)
    assert g.x_axis()[0] == -4.0 and g.x_axis()[-1] == pytest.approx(3.5)
    assert g.xi_axis().shape == (16,)
    assert g.weyl_xi_axis()[0] == pytest.approx(-np.pi / g.h)


@pytest.mark.parametrize("d,n,L,msg", [(3, 8, 1.0, "d must be"), (1, 9, 1.0, "even"),
                                       (1, 6, 1.0, ">= 8"), (1, 8, 0.0, "positive")])
def test_grid_validation(d, n, L, msg):
    with pytest.raises(ValueError, match=msg):
        make_grid(d, n, L)


def test_grid_json_roundtrip():
    g = make_grid(2, 12, 3.5)
    assert PhaseGrid.from_json(g.to_json()) == g


def test_refined_lattice_contains_midpoints():
    g = make_grid(1, 10, 2.0)
    x, r = g.x_axis(), g.refined_axis()
    a, b = np.meshgrid(np.arange(g.n), np.arange(g.n), indexing="ij")
    assert np.allclose(r[a + b], 0.5 * (x[a] + x[b]), atol=1e-14)


def test_symplectic_form_examples():
    X = PhasePoint([1.0], [0.0])
    Y = PhasePoint([0.0], [1.0])
    assert symplectic_form(X, Y) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        symplectic_form(PhasePoint([1.0], [0.0]), PhasePoint([1.0, 0.0], [0.0, 0.0]))


@given(st.lists(finite, min_size=8, max_size=8))
def test_symplectic_form_antisymmetric(v):
    X = PhasePoint(v[0:2], v[2:4])
    Y = PhasePoint(v[4:6], v[6:8])
    assert symplectic_form(X, Y) == pytest.approx(-symplectic_form(Y, X), abs=1e-9)
    assert symplectic_form(X, X) == 0.0


def test_phase_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhasePoint([np.nan], [0.0])


def test_lp_norm_constant_and_errors():
    g = make_grid(1, 8, 1.0)
    f = SymbolField(g, np.ones(g.field_shape(PLAIN)), PLAIN)
    area = (2 * g.L) * (g.n * g.k)
    assert lp_norm(f, 2) == pytest.approx(np.sqrt(area))
    assert lp_norm(f, np.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.sampled_from([1.0, 2.0, 3.5, np.inf]))
def test_lp_norm_homogeneous(c, p):
    g = make_grid(1, 8, 2.0)
    f = sample(gaussian(1), g, PLAIN)
    assert lp_norm(f.with_values(c * f.values), p) == pytest.approx(c * lp_norm(f, p), rel=1e-12)


def test_symbol_field_shape_check():
    g = make_grid(1, 8, 1.0)
    with pytest.raises(ValueError, match="shape"):
        SymbolField(g, np.zeros((8, 8)), WEYL)
    with pytest.raises(ValueError, match="non-finite"):
        SymbolField(g, np.full((8, 8), np.inf), PLAIN)


@pytest.mark.parametrize("d,order,count", [(1, 3, 1), (2, 0, 1), (2, 2, 3), (2, 4, 5)])
def test_multi_indices(d, order, count):
    idx = multi_indices(d, order)
    assert len(idx) == count
    assert all(sum(a) == order for a in idx)


def test_hoermander_seminorm_bracket():
    g = make_grid(1, 16, 3.0)
    F = bracket_power(2.0, 1)
    assert hoermander_seminorm(F, 2.0, 0, 0, g) == pytest.approx(1.0)
    # d/dxi <xi>^2 = 2 xi; <xi>^{-1} |2 xi| <= 2 with max near the band edge
    val = hoermander_seminorm(F, 1.0, 0, 1, g)
    assert 1.0 < val <= 2.0
    with pytest.raises(ValueError, match="exceeds"):
        hoermander_seminorm(F, 0.0, 10, 10, g)


def test_spectral_derivative_trig_polynomial():
    g = make_grid(1, 16, np.pi)
    x, xi = g.mesh(PLAIN)
    f = SymbolField(g, np.broadcast_to(np.sin(2 * x[0]) + 0j, g.field_shape(PLAIN)).copy(), PLAIN)
    df = spectral_derivative(f, (1,), (0,))
    assert np.allclose(df.values, np.broadcast_to(2 * np.cos(2 * x[0]), df.values.shape), atol=1e-12)


def test_fourier_multiplier_identity():
    g = make_grid(2, 8, 2.0)
    f = sample(gaussian(2), g, PLAIN)
    out = fourier_multiplier(f, lambda c: 1.0, lambda c: 1.0)
    assert np.allclose(out.values, f.values, atol=1e-14)
