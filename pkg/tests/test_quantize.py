import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magweyl.geometry import (gauge_shift, oscillatory_field, poincare_gauge, quadratic_gauge,
                              symmetric_gauge, zero_potential)
from magweyl.grid import PLAIN, WEYL, PhasePoint, make_grid, sample
from magweyl.quantize import (inverse_weyl, lattice_shift, op_matrix, read_kernel_csv,
                              resolved_band_mask, shift_conjugate, weyl_kernel, weyl_system_matrix,
                              write_kernel)
from magweyl.symbols import constant, gaussian, position_only

seeds = st.integers(0, 2 ** 31 - 1)


def naive_kernel(F, grid):
    """Direct midpoint sum over the Weyl dual lattice, one entry at a time."""
    pts = grid.points()
    xi1 = grid.weyl_xi_axis()
    xis = np.stack(np.meshgrid(*([xi1] * grid.d), indexing="ij"), -1).reshape(-1, grid.d)
    c = (grid.k / (4 * np.pi)) ** grid.d
    K = np.empty((grid.size, grid.size), dtype=complex)
    for a, xa in enumerate(pts):
        for b, xb in enumerate(pts):
            mid = 0.5 * (xa + xb)
            vals = F(tuple(np.full(len(xis), m) for m in mid), tuple(xis.T))
            K[a, b] = c * np.sum(np.exp(1j * xis @ (xa - xb)) * vals)
    return K


def _random_symbol(d, seed):
    rng = np.random.default_rng(seed)
    x0, p0 = rng.normal(size=d), rng.normal(size=d)
    amp = complex(*rng.normal(size=2))
    return gaussian(d, a=rng.uniform(0.3, 1.0), c=rng.uniform(0.3, 1.0), x0=x0, xi0=p0, amplitude=amp)


@pytest.mark.parametrize("d", [1, 2])
def test_kernel_matches_naive_sum(d):
    g = make_grid(d, 8, 2.5)
    F = _random_symbol(d, 3)
    assert np.allclose(weyl_kernel(F, g), naive_kernel(F, g), atol=1e-12)


def test_field_and_callable_agree():
    g = make_grid(2, 8, 2.0)
    F = _random_symbol(2, 5)
    assert np.allclose(weyl_kernel(F, g), weyl_kernel(sample(F, g, WEYL), g), atol=1e-14)
    with pytest.raises(ValueError, match="Weyl lattice"):
        weyl_kernel(sample(F, g, PLAIN), g)


def test_product_symbol_gives_kronecker_kernel():
    g1, g2 = make_grid(1, 8, 3.0), make_grid(2, 8, 3.0)
    f1, f2 = _random_symbol(1, 1), _random_symbol(1, 2)

    def F(x, xi):
        return f1((x[0],), (xi[0],)) * f2((x[1],), (xi[1],))

    assert np.allclose(weyl_kernel(F, g2), np.kron(weyl_kernel(f1, g1), weyl_kernel(f2, g1)), atol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_unit_symbol_is_identity(d):
    g = make_grid(d, 8, 2.0)
    A = symmetric_gauge(0.7) if d == 2 else zero_potential(1)
    assert np.allclose(op_matrix(constant(1.0, d), A, g).matrix, np.eye(g.size), atol=1e-13)


def test_position_symbol_is_multiplication():
    g = make_grid(1, 10, 2.0)
    V = position_only(lambda x: np.cos(x[0]), 1)
    M = op_matrix(V, zero_potential(1), g).matrix
    assert np.allclose(M, np.diag(np.cos(g.x_axis())), atol=1e-13)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_adjoint_is_conjugate_symbol(seed):
    g = make_grid(2, 8, 2.5)
    A = poincare_gauge(oscillatory_field(0.4, 0.6))
    F = _random_symbol(2, seed)
    Op = op_matrix(F, A, g)
    assert np.allclose(Op.adjoint().matrix, op_matrix(F.conjugate(), A, g).matrix, atol=1e-13)
    real = gaussian(2, a=0.4)
    assert op_matrix(real, A, g).is_self_adjoint()


def test_gauge_covariance():
    g = make_grid(2, 8, 2.5)
    A = symmetric_gauge(1.0)
    phi = quadratic_gauge([[0.3, 0.2], [0.2, -0.1]], [0.5, -0.4])
    U = np.diag(np.exp(1j * phi.value(g.points())))
    F = _random_symbol(2, 9)
    lhs = op_matrix(F, gauge_shift(A, phi), g).matrix
    rhs = U @ op_matrix(F, A, g).matrix @ U.conj().T
    assert np.allclose(lhs, rhs, atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(seeds, st.sampled_from([1, 2]))
def test_inverse_is_exact_right_inverse(seed, d):
    g = make_grid(d, 8, 2.0)
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(g.size, g.size)) + 1j * rng.normal(size=(g.size, g.size))
    F = inverse_weyl(K, g)
    assert F.lattice == WEYL
    assert np.allclose(weyl_kernel(F, g), K, atol=1e-12 * np.abs(K).max())
    assert np.all(F.values[np.broadcast_to(resolved_band_mask(g), F.values.shape) == 0] == 0)


def test_inverse_recovers_smooth_symbol_on_band():
    # negligible beyond |xi| = pi / (2h), so nothing folds into the band;
    # near the box edge the available x - y range is cut, so compare inside
    g = make_grid(1, 64, 16.0)
    F = gaussian(1, a=0.5, c=3.0)
    rec = inverse_weyl(weyl_kernel(F, g), g)
    ref = sample(F, g, WEYL).values * resolved_band_mask(g)
    inner = np.abs(g.refined_axis()) <= g.L / 2
    assert np.abs(rec.values - ref)[inner].max() < 1e-10


def test_inverse_shape_check():
    with pytest.raises(ValueError, match="shape"):
        inverse_weyl(np.zeros((3, 3)), make_grid(1, 8, 1.0))


def test_lattice_shift():
    g = make_grid(2, 8, 2.0)
    assert lattice_shift([1.0, -0.5], g).tolist() == [2, -1]
    with pytest.raises(ValueError, match="lattice-aligned"):
        lattice_shift([0.3, 0.0], g)
    with pytest.raises(ValueError, match="dimension"):
        lattice_shift([0.5], g)


def test_shift_conjugate_matches_dense_weyl_system():
    g = make_grid(2, 8, 2.0)
    A = poincare_gauge(oscillatory_field(0.5, 0.7))
    X = op_matrix(_random_symbol(2, 4), A, g).matrix
    z = np.array([0.5, -1.0])
    W = weyl_system_matrix(PhasePoint(z, [0.0, 0.0]), A, g)
    assert np.allclose(shift_conjugate(X, z, A, g), W.conj().T @ X @ W, atol=1e-14)


def test_weyl_system_is_partial_isometry():
    g = make_grid(1, 8, 2.0)
    W = weyl_system_matrix(PhasePoint([1.0], [0.3]), zero_potential(1), g)
    P = W @ W.conj().T
    assert np.allclose(P, np.diag(np.diag(P)).real)
    assert sorted(np.round(np.diag(P).real, 12)) == [0.0] * 2 + [1.0] * 6


def test_kernel_files_round_trip(tmp_path):
    K = np.random.default_rng(1).normal(size=(4, 4)) + 1j
    npy, csv_path = write_kernel(K, tmp_path / "sub" / "k")
    assert np.array_equal(np.load(npy), K)
    assert np.array_equal(read_kernel_csv(csv_path), K)
