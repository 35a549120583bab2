"""Bessel-potential kernels and the elliptic factorization of phase-space symbols.

On a periodic lattice every object here is a Fourier multiplier, so the
factorization ``f = (L_{s,t} f) * Psi_{s,t}`` is exact up to roundoff.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import PLAIN, PhaseGrid, SymbolField, fourier_multiplier, japanese


@dataclass
class BesselKernel:
    """Samples of ``psi_s`` on one lattice axis set of ``grid``.

    ``base == "x"`` means ``psi_s`` lives on the configuration lattice (the
    inverse transform of ``<xi>^{-s}``); ``base == "xi"`` means ``psi-dot_t``
    on the dual lattice (the inverse transform of ``<x>^{-t}``).
    """

    s: float
    base: str
    grid: PhaseGrid
    values: np.ndarray
    coords: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def step(self) -> float:
        return self.grid.h if self.base == "x" else self.grid.k

    def radii(self) -> np.ndarray:
        return np.sqrt(sum(c ** 2 for c in self.coords))

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.step ** self.grid.d)

    def mass(self) -> float:
        return float(np.real(np.sum(self.values)) * self.step ** self.grid.d)


def _axis(grid: PhaseGrid, base: str) -> tuple[np.ndarray, float]:
    if base == "x":
        return grid.x_axis(), grid.h
    if base == "xi":
        return grid.xi_axis(), grid.k
    raise ValueError(f"base must be 'x' or 'xi', got {base!r}")


def bessel_kernel(s: float, grid: PhaseGrid, base: str = "x") -> BesselKernel:
    """Discrete ``psi_s``: inverse lattice transform of ``<freq>^{-s}``."""
    ax, step = _axis(grid, base)
    d = grid.d
    freq = 2 * np.pi * np.fft.fftfreq(len(ax), d=step)
    comps = np.meshgrid(*([freq] * d), indexing="ij")
    mult = japanese(comps) ** (-float(s))
    vals = np.fft.fftshift(np.fft.ifftn(mult)).real / step ** d
    coords = tuple(np.meshgrid(*([ax] * d), indexing="ij"))
    return BesselKernel(float(s), base, grid, vals, coords)


@dataclass
class SlopeFit:
    slope: float
    expected: float | None
    status: str
    n_points: int
    r_range: tuple[float, float]


def near_origin_slope(psi: BesselKernel, r_min: float, r_max: float | None = None) -> SlopeFit:
    """Log-log slope of ``|psi_s|`` against ``r`` on ``[r_min, r_max]``.

    Only the singular regime ``s < d`` has a power law ``r^{s-d}``; for
    ``s >= d`` the fit is skipped and reported as such.
    """
    d = psi.grid.d
    r_max = 10 * r_min if r_max is None else r_max
    expected = psi.s - d
    if expected >= 0:
        return SlopeFit(float("nan"), None, "skipped: kernel is not singular at the origin", 0, (r_min, r_max))
    if r_min < 2 * psi.step:
        raise ValueError(f"r_min={r_min} is below two lattice steps ({2 * psi.step})")
    r = psi.radii().ravel()
    v = np.abs(psi.values).ravel()
    sel = (r >= r_min) & (r <= r_max) & (v > 0)
    if np.unique(np.round(r[sel], 12)).size < 4:
        raise ValueError("too few lattice radii in the fit window")
    slope = np.polyfit(np.log(r[sel]), np.log(v[sel]), 1)[0]
    return SlopeFit(float(slope), float(expected), "fitted", int(sel.sum()), (r_min, r_max))


def radial_profile(psi: BesselKernel) -> tuple[np.ndarray, np.ndarray]:
    """Values along the positive first coordinate axis."""
    n = psi.grid.n
    idx = (slice(n // 2, None),) + (n // 2,) * (psi.grid.d - 1)
    return psi.coords[0][idx], psi.values[idx]


def elliptic_multiplier(f: SymbolField, s: float, t: float) -> SymbolField:
    """``L_{s,t} f``: multiply by ``<freq_x>^s <freq_xi>^t`` in the transform domain.

    Here ``freq_x`` is dual to position (the ``xi`` direction of ``<D_x>``)
    and ``freq_xi`` dual to momentum.
    """
    return fourier_multiplier(f, lambda c: japanese(c) ** s, lambda c: japanese(c) ** t)


def product_kernel(s: float, t: float, grid: PhaseGrid) -> SymbolField:
    """``Psi_{s,t}(x, xi) = psi_s(x) psi-dot_t(xi)`` on the plain lattice."""
    px = bessel_kernel(s, grid, "x").values
    pk = bessel_kernel(t, grid, "xi").values
    d = grid.d
    vals = px.reshape(px.shape + (1,) * d) * pk.reshape((1,) * d + pk.shape)
    return SymbolField(grid, vals.astype(complex), PLAIN)


def phase_convolution(f: SymbolField, g: SymbolField) -> SymbolField:
    """Periodic convolution ``sum_Y f(Y) g(X - Y) w`` with Lebesgue weights."""
    if f.grid != g.grid or f.lattice != g.lattice:
        raise ValueError("convolution operands live on different lattices")
    axes = tuple(range(f.values.ndim))
    F = np.fft.fftn(np.fft.ifftshift(f.values, axes=axes))
    G = np.fft.fftn(np.fft.ifftshift(g.values, axes=axes))
    out = np.fft.fftshift(np.fft.ifftn(F * G), axes=axes) * f.weight
    return f.with_values(out)


def reconstruct_check(f: SymbolField, s: float, t: float) -> float:
    """Max residual of ``f - (L_{s,t} f) * Psi_{s,t}``."""
    if f.lattice != PLAIN:
        raise ValueError("factorization check runs on the plain lattice")
    psi = product_kernel(s, t, f.grid)
    rec = phase_convolution(elliptic_multiplier(f, s, t), psi)
    return float(np.abs(rec.values - f.values).max())


def write_profile_csv(psi: BesselKernel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    r, v = radial_profile(psi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "psi"])
        for ri, vi in zip(r, v):
            w.writerow([repr(float(ri)), repr(float(vi))])
    return path
