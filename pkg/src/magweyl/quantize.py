"""Magnetic Weyl quantization on the configuration lattice.

The Weyl kernel of a symbol ``F`` is evaluated on the refined position lattice
times the Weyl dual lattice::

    K(a, b) = (2 pi)^{-d} (k/2)^d sum_j exp(i xi_j (x_a - x_b)) F(x_{a+b}, xi_j)

The sum over ``j`` is an FFT per midpoint.  The magnetic kernel multiplies this
by the line phase ``Lambda^A(x_a, x_b)`` and the operator matrix acting on
samples is ``K * h^d``.  With uniform weights, grid-``L^2`` norms of operators
coincide with the spectral norms of these matrices.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import DEFAULT_QUAD_ORDER, VectorPotential, line_phase
from .grid import WEYL, PhaseGrid, PhasePoint, SymbolField


@dataclass
class OperatorMatrix:
    """Matrix of an operator on grid-``L^2`` (``n^d`` samples, row-major)."""

    grid: PhaseGrid
    matrix: np.ndarray

    @property
    def kernel(self) -> np.ndarray:
        """Integral kernel ``K(x_a, x_b)``, i.e. the matrix divided by ``h^d``."""
        return self.matrix / self.grid.w_x

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.matrix.conj().T)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.matrix @ other.matrix)

    def is_self_adjoint(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.abs(m - m.conj().T).max() <= tol * max(1.0, np.abs(m).max()))


def _validate_field(F: SymbolField, grid: PhaseGrid) -> None:
    if F.lattice != WEYL:
        raise ValueError("Weyl kernels need samples on the Weyl lattice")
    if F.grid != grid:
        raise ValueError("symbol field lives on a different grid")


def _kernel_constant(grid: PhaseGrid) -> float:
    return (0.5 * grid.k / (2 * np.pi)) ** grid.d


def _symbol_block(F, grid: PhaseGrid, s1: int | None) -> np.ndarray:
    """Samples with the first refined index fixed to ``s1`` (``None`` for all)."""
    if isinstance(F, SymbolField):
        _validate_field(F, grid)
        return F.values if s1 is None else F.values[s1]
    xr, pw = grid.axes(WEYL)
    x, xi = grid.mesh(WEYL)
    if s1 is not None:
        x = (np.full((1,) * (2 * grid.d - 1), xr[s1]),) + tuple(c[0] for c in x[1:])
        xi = tuple(c[0] for c in xi)
        shape = grid.field_shape(WEYL)[1:]
    else:
        shape = grid.field_shape(WEYL)
    vals = np.broadcast_to(F(x, xi), shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("symbol produced non-finite samples")
    return np.asarray(vals, dtype=complex)


def _band_fft(block: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """``sum_j F_j exp(2 pi i j r / 2n)`` over the centred band ``-n <= j < n``."""
    m = 1
    for a in axes:
        m *= block.shape[a]
    return np.fft.ifftn(np.fft.ifftshift(block, axes=axes), axes=axes) * m


def weyl_kernel(F, grid: PhaseGrid) -> np.ndarray:
    """Weyl kernel ``K`` of ``F`` as an ``(n^d, n^d)`` complex array.

    ``F`` is either a callable symbol or a :class:`SymbolField` on the Weyl
    lattice.
    """
    n, d = grid.n, grid.d
    c = _kernel_constant(grid)
    idx = np.arange(n)
    A_, B_ = np.meshgrid(idx, idx, indexing="ij")
    S, R = A_ + B_, (A_ - B_) % (2 * n)
    if d == 1:
        G = _band_fft(_symbol_block(F, grid, None), (1,))
        return c * G[S, R]
    K = np.zeros((n, n, n, n), dtype=complex)
    for s1 in range(2 * n - 1):
        G = _band_fft(_symbol_block(F, grid, s1), (1, 2))   # (s2, r1, r2)
        for a1 in range(max(0, s1 - n + 1), min(n, s1 + 1)):
            b1 = s1 - a1
            K[a1, :, b1, :] = c * G[S, (a1 - b1) % (2 * n), R]
    return K.reshape(n * n, n * n)


def inverse_weyl(kernel: np.ndarray, grid: PhaseGrid) -> SymbolField:
    """Symbol on the Weyl lattice whose Weyl kernel is exactly ``kernel``.

    Midpoint index ``s`` and difference ``a - b`` share parity, so the kernel
    only sees the fold ``F(s, j) + (-1)^s F(s, j + n)`` of a symbol.  The
    returned representative puts that fold on the resolved band
    ``-n/2 <= j < n/2`` (``|xi| <= pi / (2h)``) and vanishes outside it; a
    smooth symbol that is negligible beyond the band is recovered there.
    """
    n, d = grid.n, grid.d
    kernel = np.asarray(kernel)
    if kernel.shape != (grid.size, grid.size):
        raise ValueError(f"kernel shape {kernel.shape} does not match grid size {grid.size}")
    idx = np.arange(n)
    A_, B_ = np.meshgrid(idx, idx, indexing="ij")
    S, R = A_ + B_, (A_ - B_) % (2 * n)
    m = 2 * n
    if d == 1:
        G = np.zeros((m, m), dtype=complex)
        G[S, R] = kernel
        axes = (1,)
    else:
        K4 = kernel.reshape(n, n, n, n)
        G = np.zeros((m, m, m, m), dtype=complex)
        for a1 in range(n):
            for b1 in range(n):
                G[a1 + b1, S, (a1 - b1) % m, R] = K4[a1, :, b1, :]
        axes = (2, 3)
    F = np.fft.fftshift(np.fft.fftn(G, axes=axes), axes=axes) * (2 ** d * grid.w_x)
    F = F * resolved_band_mask(grid)
    return SymbolField(grid, F, WEYL)


def resolved_band_mask(grid: PhaseGrid) -> np.ndarray:
    """Broadcastable mask of the Weyl dual points with ``-n/2 <= j < n/2``."""
    j = np.arange(-grid.n, grid.n)
    band = ((j >= -grid.n // 2) & (j < grid.n // 2)).astype(float)
    mask = np.ones((1,) * (2 * grid.d))
    for a in range(grid.d):
        shape = [1] * (2 * grid.d)
        shape[grid.d + a] = 2 * grid.n
        mask = mask * band.reshape(shape)
    return mask


def line_phase_matrix(A: VectorPotential, grid: PhaseGrid,
                      quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``Lambda^A(x_a, x_b)`` for all lattice pairs."""
    N = grid.size
    if A.is_zero:
        return np.ones((N, N), dtype=complex)
    if A.d != grid.d:
        raise ValueError("dimension mismatch between potential and grid")
    pts = grid.points()
    out = np.empty((N, N), dtype=complex)
    rows = max(1, 2 ** 22 // (N * quad_order * grid.d))
    for i in range(0, N, rows):
        out[i:i + rows] = line_phase(A, pts[i:i + rows, None, :], pts[None, :, :], quad_order)
    return out


def twist_kernel(kernel: np.ndarray, A: VectorPotential, grid: PhaseGrid,
                 quad_order: int = DEFAULT_QUAD_ORDER, inverse: bool = False) -> np.ndarray:
    """Multiply (or divide, with ``inverse``) a kernel by ``Lambda^A``."""
    lam = line_phase_matrix(A, grid, quad_order)
    return kernel * (lam.conj() if inverse else lam)


def op_matrix(F, A: VectorPotential, grid: PhaseGrid,
              quad_order: int = DEFAULT_QUAD_ORDER, phase: np.ndarray | None = None) -> OperatorMatrix:
    """Matrix of ``Op^A(F)`` on grid-``L^2``.

    ``phase`` may carry a precomputed :func:`line_phase_matrix` for ``A``.
    """
    lam = line_phase_matrix(A, grid, quad_order) if phase is None else phase
    return OperatorMatrix(grid, weyl_kernel(F, grid) * lam * grid.w_x)


def lattice_shift(z, grid: PhaseGrid, tol: float = 1e-9) -> np.ndarray:
    """Integer lattice offset of a position vector; raises if off-lattice."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (grid.d,):
        raise ValueError(f"dimension mismatch: expected {grid.d} components")
    m = np.rint(z / grid.h)
    if np.any(np.abs(m * grid.h - z) > tol * max(1.0, grid.h)):
        raise ValueError(f"translation {z.tolist()} is not lattice-aligned (step {grid.h})")
    return m.astype(int)


def _shift_indices(grid: PhaseGrid, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices ``q`` and ``q + m`` for all ``q`` with both in range."""
    mesh_ok = np.ones((grid.n,) * grid.d, dtype=bool)
    src = np.indices((grid.n,) * grid.d)
    dst = np.stack([src[j] + m[j] for j in range(grid.d)])
    for j in range(grid.d):
        mesh_ok &= (dst[j] >= 0) & (dst[j] < grid.n)
    src_flat = np.ravel_multi_index(tuple(s[mesh_ok] for s in src), (grid.n,) * grid.d)
    dst_flat = np.ravel_multi_index(tuple(t[mesh_ok] for t in dst), (grid.n,) * grid.d)
    return src_flat, dst_flat


def weyl_system_matrix(Z: PhasePoint, A: VectorPotential, grid: PhaseGrid,
                       quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """Magnetic Weyl system ``W^A(Z)`` restricted to the lattice.

    ``(W u)(q) = Lambda^A(q, q + z) exp(i <zeta, z>/2) exp(-i <zeta, q>) u(q + z)``;
    rows whose shifted point leaves the box are zero.
    """
    m = lattice_shift(Z.x, grid)
    pts = grid.points()
    src, dst = _shift_indices(grid, m)
    q = pts[src]
    vals = (line_phase(A, q, q + Z.x, quad_order)
            * np.exp(0.5j * np.dot(Z.xi, Z.x)) * np.exp(-1j * q @ Z.xi))
    W = np.zeros((grid.size, grid.size), dtype=complex)
    W[src, dst] = vals
    return W


def conjugation_phase(z, A: VectorPotential, grid: PhaseGrid,
                      quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``lambda_z(q) = Lambda^A(q, q - z)`` on the configuration lattice."""
    pts = grid.points()
    return line_phase(A, pts, pts - np.asarray(z, dtype=float), quad_order)


def shift_conjugate(X: np.ndarray, z, A: VectorPotential, grid: PhaseGrid,
                    quad_order: int = DEFAULT_QUAD_ORDER, phase: np.ndarray | None = None) -> np.ndarray:
    """``W^A(z, 0)^* X W^A(z, 0)`` computed by index shifting.

    The momentum part of ``W^A(z, zeta)`` contributes the extra factor
    ``exp(i <zeta, q - q'>)``, which callers multiply in separately.
    """
    m = lattice_shift(z, grid)
    src, dst = _shift_indices(grid, -m)     # q' = q - z
    Y = np.zeros_like(X)
    Y[np.ix_(src, src)] = X[np.ix_(dst, dst)]
    lam = conjugation_phase(z, A, grid, quad_order) if phase is None else phase
    return lam[:, None] * Y * lam.conj()[None, :]


def write_kernel(kernel: np.ndarray, stem: str | Path) -> tuple[Path, Path]:
    """Write ``stem.npy`` and ``stem.csv`` (row-major, re/im interleaved)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    npy = stem.with_suffix(".npy")
    np.save(npy, np.asarray(kernel))
    path_csv = stem.with_suffix(".csv")
    K = np.atleast_2d(np.asarray(kernel, dtype=complex))
    inter = np.empty((K.shape[0], 2 * K.shape[1]))
    inter[:, 0::2] = K.real
    inter[:, 1::2] = K.imag
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in inter:
            w.writerow([repr(float(v)) for v in row])
    return npy, path_csv


def read_kernel_csv(path: str | Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data[:, 0::2] + 1j * data[:, 1::2]
