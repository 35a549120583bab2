"""Magnetic Moyal product, mixed product, magnetic translations.

The mixed representation of a symbol on the Weyl lattice is its partial
Fourier transform in momentum,

    f~(x, y_r) = (2 pi)^{-d/2} (k/2)^d sum_j exp(-i xi_j y_r) f(x, xi_j),

with ``y_r = h r`` for ``-n <= r < n``.  In this representation the mixed
product ``(f * g)(x, xi) = (2 pi)^{-d/2} int f(x, eta) g(x, xi - eta) d eta``
is pointwise, its unit is the constant 1, and the Weyl kernel reads
``K(a, b) = (2 pi)^{-d/2} f~(x_{a+b}, y_{b-a})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .geometry import (DEFAULT_QUAD_ORDER, MagneticField, VectorPotential,
                       omega_centered, parallelogram_flux)
from .grid import WEYL, PhaseGrid, PhasePoint, SymbolField, sample
from .quantize import (OperatorMatrix, inverse_weyl, lattice_shift, line_phase_matrix, op_matrix,
                       shift_conjugate, twist_kernel, weyl_kernel)

DEFAULT_NODE_BUDGET = 1e9


class QuadratureBudgetError(RuntimeError):
    """Raised when a quadrature would exceed the configured node budget."""


# --------------------------------------------------------------------------
# mixed representation

@dataclass
class MixedField:
    """Samples ``f~(x_s, y_r)`` on the refined x lattice times the y lattice."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected = self.grid.field_shape(WEYL)
        if self.values.shape != expected:
            raise ValueError(f"mixed field shape {self.values.shape} does not match {expected}")

    def y_axis(self) -> np.ndarray:
        return self.grid.h * np.arange(-self.grid.n, self.grid.n)


def _xi_axes(grid: PhaseGrid) -> tuple[int, ...]:
    return tuple(range(grid.d, 2 * grid.d))


def to_mixed(f: SymbolField) -> MixedField:
    if f.lattice != WEYL:
        raise ValueError("mixed representation needs Weyl-lattice samples")
    g = f.grid
    ax = _xi_axes(g)
    c = (0.5 * g.k) ** g.d / (2 * np.pi) ** (g.d / 2)
    vals = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes=ax), axes=ax), axes=ax)
    return MixedField(g, c * vals)


def from_mixed(m: MixedField) -> SymbolField:
    g = m.grid
    ax = _xi_axes(g)
    c = (2 * g.n * g.h) ** g.d / (2 * np.pi) ** (g.d / 2)
    vals = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(m.values, axes=ax), axes=ax), axes=ax)
    return SymbolField(g, c * vals, WEYL)


def mixed_unit(grid: PhaseGrid) -> MixedField:
    """Unit of the mixed product (``1 (x) delta_0`` as a symbol)."""
    return MixedField(grid, np.ones(grid.field_shape(WEYL), dtype=complex))


def mixed_product(f, g: SymbolField) -> SymbolField:
    """``f * g``; ``f`` may be a :class:`MixedField` or a Weyl-lattice field."""
    fm = f if isinstance(f, MixedField) else to_mixed(f)
    if fm.grid != g.grid:
        raise ValueError("mixed product operands live on different grids")
    return from_mixed(MixedField(g.grid, fm.values * to_mixed(g).values))


def _mixed_points(grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Broadcastable ``x`` and ``y`` point arrays with trailing axis ``d``."""
    xr = grid.refined_axis()
    yr = grid.h * np.arange(-grid.n, grid.n)
    d = grid.d
    xs = np.stack(np.meshgrid(*([xr] * d), indexing="ij"), axis=-1)
    ys = np.stack(np.meshgrid(*([yr] * d), indexing="ij"), axis=-1)
    xs = xs.reshape((2 * grid.n,) * d + (1,) * d + (d,))
    ys = ys.reshape((1,) * d + (2 * grid.n,) * d + (d,))
    return xs, ys


def theta_factor(B: MagneticField, z, grid: PhaseGrid,
                 quad_order: int = DEFAULT_QUAD_ORDER) -> MixedField:
    """Mixed representation ``exp(-i S^B_z(x, y))``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    shape = grid.field_shape(WEYL)
    if B.is_zero or not np.any(z):
        return mixed_unit(grid)
    xs, ys = _mixed_points(grid)
    if B.constant is not None:
        S = parallelogram_flux(B, z, xs, ys)
    else:
        S = np.empty(shape)
        for i in range(shape[0]):
            S[i] = parallelogram_flux(B, z, xs[i], ys[0], quad_order)
    return MixedField(grid, np.exp(-1j * np.broadcast_to(S, shape)))


def magnetic_translate(g, Z: PhasePoint, B: MagneticField, grid: PhaseGrid,
                       quad_order: int = DEFAULT_QUAD_ORDER) -> SymbolField:
    """``Theta^B_z * (tau_Z g)`` with ``tau_Z g = g(. + Z)`` re-evaluated exactly."""
    lattice_shift(Z.x, grid)
    shifted = sample(g.shifted(Z.x, Z.xi), grid, WEYL)
    return mixed_product(theta_factor(B, Z.x, grid, quad_order), shifted)


# --------------------------------------------------------------------------
# Moyal product

def moyal_kernel_route(f, g, A: VectorPotential, grid: PhaseGrid,
                       quad_order: int = DEFAULT_QUAD_ORDER) -> SymbolField:
    """Symbol of ``Op^A(f) Op^A(g)``; exact on the kernel level by construction."""
    P = op_matrix(f, A, grid, quad_order).matrix @ op_matrix(g, A, grid, quad_order).matrix
    K = twist_kernel(P / grid.w_x, A, grid, quad_order, inverse=True)
    return inverse_weyl(K, grid)


@dataclass
class DirectQuadrature:
    """Node layout of the direct Moyal quadrature.

    ``y_step`` is rounded down so that the refined step ``h/2`` is an integer
    multiple of it; ``y_extent`` truncates the ``y, z`` box, ``eta_step`` and
    ``eta_extent`` the inner momentum transforms.
    """

    y_step: float = 0.25
    y_extent: float = 3.0
    eta_step: float = 0.25
    eta_extent: float = 7.0


def _momentum_transform(F, u_axis: np.ndarray, w_axis: np.ndarray, d: int,
                        eta_step: float, eta_extent: float) -> np.ndarray:
    """``F^(u, w) = int exp(i <eta, w>) F(u, eta) d eta`` on tensor axes."""
    ne = int(math.ceil(eta_extent / eta_step))
    eta = eta_step * np.arange(-ne, ne + 1)
    phase = np.exp(1j * np.outer(eta, w_axis)) * eta_step      # (eta, w)
    if d == 1:
        vals = F((u_axis[:, None],), (eta[None, :],))
        return np.asarray(vals, dtype=complex) @ phase
    vals = F((u_axis[:, None, None, None], u_axis[None, :, None, None]),
             (eta[None, None, :, None], eta[None, None, None, :]))
    vals = np.asarray(np.broadcast_to(vals, (len(u_axis),) * 2 + (len(eta),) * 2), dtype=complex)
    vals = vals @ phase                                          # contract eta2
    vals = np.einsum("abew,ev->abvw", vals, phase, optimize=True)  # contract eta1
    return vals


def moyal_direct(f, g, B: MagneticField, grid: PhaseGrid,
                 quad: DirectQuadrature | None = None,
                 max_nodes: float = DEFAULT_NODE_BUDGET,
                 quad_order: int = DEFAULT_QUAD_ORDER) -> SymbolField:
    """Magnetic Moyal product by direct quadrature of the oscillatory integral.

    The momentum integrals factor out as partial Fourier transforms, which
    leaves, for every output point,

        pi^{-2d} sum_{y,z} exp(2i <xi, y - z>) omega^B(x, y, z)
                 f^(x - y, 2z) g^(x - z, -2y) dy dz.

    The guarded node count is the number of ``(x, y, z)`` integrand
    evaluations (times ``quad_order^2`` when the flux needs quadrature).
    """
    quad = quad or DirectQuadrature()
    d, n = grid.d, grid.n
    half = 0.5 * grid.h
    m = max(1, int(math.ceil(half / quad.y_step - 1e-12)))
    step = half / m
    ny = int(math.ceil(quad.y_extent / step))
    P = 2 * ny + 1
    nodes = step * np.arange(-ny, ny + 1)
    n_out_x = (2 * n) ** d
    count = n_out_x * float(P) ** (2 * d)
    if B.constant is None and not B.is_zero:
        count *= quad_order ** 2
    if count > max_nodes:
        raise QuadratureBudgetError(
            f"direct Moyal quadrature needs {count:.3g} node evaluations, budget is {max_nodes:.3g}")

    u_axis = -grid.L + step * np.arange(-ny, (2 * n - 1) * m + ny + 1)
    fc = _momentum_transform(f, u_axis, 2 * nodes, d, quad.eta_step, quad.eta_extent)
    gc = _momentum_transform(g, u_axis, 2 * nodes, d, quad.eta_step, quad.eta_extent)

    xi = grid.weyl_xi_axis()
    if d == 1:
        E = np.exp(2j * np.outer(xi, nodes))
        ymesh = nodes[:, None]
    else:
        XI = np.stack(np.meshgrid(xi, xi, indexing="ij"), -1).reshape(-1, 2)
        Y = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), -1).reshape(-1, 2)
        E = np.exp(2j * XI @ Y.T)
        ymesh = Y
    Ec = E.conj()
    const_omega = None
    if B.is_zero:
        const_omega = 1.0
    elif B.constant is not None:
        const_omega = np.exp(-2j * B.constant * (ymesh[:, None, 0] * ymesh[None, :, 1]
                                                 - ymesh[:, None, 1] * ymesh[None, :, 0]))
    pref = np.pi ** (-2 * d) * step ** (2 * d)
    out = np.empty(grid.field_shape(WEYL), dtype=complex)
    refined = grid.refined_axis()
    for s in np.ndindex(*(2 * n,) * d):
        sl = tuple(slice(si * m, si * m + P) for si in s)
        fs = fc[sl][(slice(None, None, -1),) * d].reshape(P ** d, P ** d)
        gs = gc[sl][(slice(None, None, -1),) * d + (slice(None, None, -1),) * d]
        gs = gs.reshape(P ** d, P ** d).T
        if const_omega is None:
            x = np.array([refined[si] for si in s])
            om = omega_centered(B, x, ymesh[:, None, :], ymesh[None, :, :], quad_order)
        else:
            om = const_omega
        M = om * fs * gs
        vals = np.einsum("ay,ay->a", E @ M, Ec, optimize=True) * pref
        out[s] = vals.reshape((2 * n,) * d)
    return SymbolField(grid, out, WEYL)


# --------------------------------------------------------------------------
# phase-space lattices, convolution, Kato expansion

@dataclass(frozen=True)
class ZLattice:
    """Truncated lattice ``Z = (z, zeta)`` for phase-space averages.

    Position nodes are ``z_stride * h * i``, momentum nodes
    ``zeta_stride * (k/2) * j`` with ``|i|, |j| <= count // 2`` per axis, so
    that shifts by lattice nodes map the Weyl lattice into itself.
    """

    grid: PhaseGrid
    count: int = 9
    z_stride: int = 1
    zeta_stride: int = 1

    def __post_init__(self):
        if self.count < 1 or self.count % 2 == 0:
            raise ValueError("ZLattice count must be a positive odd integer")
        if self.z_stride < 1 or self.zeta_stride < 1:
            raise ValueError("ZLattice strides must be positive integers")

    @property
    def radius(self) -> int:
        return self.count // 2

    def z_axis(self) -> np.ndarray:
        return self.z_stride * self.grid.h * np.arange(-self.radius, self.radius + 1)

    def zeta_axis(self) -> np.ndarray:
        return self.zeta_stride * 0.5 * self.grid.k * np.arange(-self.radius, self.radius + 1)

    @property
    def weight(self) -> float:
        """Lebesgue cell volume ``dz dzeta``."""
        return (self.z_stride * self.grid.h * self.zeta_stride * 0.5 * self.grid.k) ** self.grid.d

    @property
    def size(self) -> int:
        return self.count ** (2 * self.grid.d)

    def mesh(self):
        za, pa = self.z_axis(), self.zeta_axis()
        d = self.grid.d
        x, xi = [], []
        for j in range(d):
            s = [1] * (2 * d)
            s[j] = self.count
            x.append(za.reshape(s))
            s = [1] * (2 * d)
            s[d + j] = self.count
            xi.append(pa.reshape(s))
        return tuple(x), tuple(xi)

    def sample(self, F) -> np.ndarray:
        x, xi = self.mesh()
        return np.asarray(np.broadcast_to(F(x, xi), (self.count,) * (2 * self.grid.d)), dtype=complex)

    def points(self) -> list[PhasePoint]:
        za, pa = self.z_axis(), self.zeta_axis()
        d = self.grid.d
        out = []
        for idx in np.ndindex(*(self.count,) * (2 * d)):
            out.append(PhasePoint([za[i] for i in idx[:d]], [pa[i] for i in idx[d:]]))
        return out


def discrete_convolution(f, g, zlat: ZLattice, grid: PhaseGrid,
                         normalization: float = 1.0) -> SymbolField:
    """``sum_Z c f(Z) g(X - Z) w_Z`` on the Weyl lattice, ``c = normalization``.

    ``g`` is re-evaluated on a padded lattice so nothing wraps around.
    """
    d, n = grid.d, grid.n
    r = zlat.radius
    ox, op_ = 2 * zlat.z_stride * r, zlat.zeta_stride * r
    xa = -grid.L + 0.5 * grid.h * np.arange(-ox, 2 * n + ox)
    pa = 0.5 * grid.k * np.arange(-n - op_, n + op_)
    x, xi = [], []
    for j in range(d):
        s = [1] * (2 * d)
        s[j] = len(xa)
        x.append(xa.reshape(s))
        s = [1] * (2 * d)
        s[d + j] = len(pa)
        xi.append(pa.reshape(s))
    shape = (len(xa),) * d + (len(pa),) * d
    g_ext = np.asarray(np.broadcast_to(g(tuple(x), tuple(xi)), shape), dtype=complex)
    coeff = zlat.sample(f) * (zlat.weight * normalization)
    dense_shape = (2 * ox + 1,) * d + (2 * op_ + 1,) * d
    dense = np.zeros(dense_shape, dtype=complex)
    sl = tuple([slice(None, None, 2 * zlat.z_stride)] * d + [slice(None, None, zlat.zeta_stride)] * d)
    dense[sl] = coeff
    out = fftconvolve(g_ext, dense, mode="valid")
    return SymbolField(grid, out, WEYL)


def weyl_average(coeffs: np.ndarray, operator_for_z, zlat: ZLattice, A: VectorPotential,
                 grid: PhaseGrid, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``sum_Z coeffs[Z] W^A(Z)^* X_z W^A(Z)`` with ``X_z = operator_for_z(z)``.

    The momentum part of ``W^A(z, zeta)`` only contributes the modulation
    ``exp(i <zeta, q - q'>)``, so ``X_z`` is shifted once per ``z`` and the
    momentum sum collapses into a single phase matrix.
    """
    d = grid.d
    pts = grid.points()
    za, pa = zlat.z_axis(), zlat.zeta_axis()
    diff = pts[:, None, :] - pts[None, :, :]                   # q - q'
    mods = [np.exp(1j * pa[:, None, None] * diff[None, :, :, j]) for j in range(d)]
    total = np.zeros((grid.size, grid.size), dtype=complex)
    for zi in np.ndindex(*(zlat.count,) * d):
        c = coeffs[zi]                                           # (count,)*d over zeta
        if not np.any(c):
            continue
        if d == 1:
            phase = np.tensordot(c, mods[0], axes=(0, 0))
        else:
            phase = np.einsum("ab,aqr,bqr->qr", c, mods[0], mods[1], optimize=True)
        z = np.array([za[i] for i in zi])
        total += phase * shift_conjugate(operator_for_z(z), z, A, grid, quad_order)
    return total


def kato_convolution_expand(f, g, A: VectorPotential, zlat: ZLattice, grid: PhaseGrid,
                            quad_order: int = DEFAULT_QUAD_ORDER,
                            max_nodes: float = DEFAULT_NODE_BUDGET) -> OperatorMatrix:
    """Quadrature of ``sum_Z f(Z) W^A(Z)^* Op^A(Theta^{-tau_z B}_{-z} * g) W^A(Z) w_Z``."""
    B = A.field
    if B is None:
        raise ValueError("vector potential does not record its magnetic field")
    cost = float(zlat.size) * grid.size ** 2
    if cost > max_nodes:
        raise QuadratureBudgetError(f"Kato expansion needs {cost:.3g} node evaluations, budget is {max_nodes:.3g}")
    g_w = sample(g, grid, WEYL)
    coeffs = zlat.sample(f) * zlat.weight
    lam = line_phase_matrix(A, grid, quad_order)

    def operator_for_z(z):
        theta = theta_factor(B.translated(z).negated(), -z, grid, quad_order)
        return op_matrix(mixed_product(theta, g_w), A, grid, quad_order, phase=lam).matrix

    return OperatorMatrix(grid, weyl_average(coeffs, operator_for_z, zlat, A, grid, quad_order))


def kernel_distance(F1, F2, grid: PhaseGrid) -> float:
    """Relative max-norm distance of the Weyl kernels of two symbols."""
    K1, K2 = weyl_kernel(F1, grid), weyl_kernel(F2, grid)
    return float(np.abs(K1 - K2).max() / max(np.abs(K2).max(), 1e-300))
