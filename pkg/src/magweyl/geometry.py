"""Magnetic fields, vector potentials, gauges and flux phase factors.

Points are arrays whose last axis has length ``d``; every function broadcasts
over the leading axes.  In ``d = 2`` a magnetic field is the 2-form
``B = B_12 dx1 ^ dx2`` with ``B_21 = -B_12``; in ``d = 1`` every 2-form
vanishes and all flux phases are identically 1.

Orientation: the triangle ``<x, y, z>`` carries the sign of
``det(y - x, z - x)``, which makes ``Omega^B(x,y,z) =
Lambda^A(x,y) Lambda^A(y,z) Lambda^A(z,x)`` hold for ``B = dA``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

DEFAULT_QUAD_ORDER = 16


def gauss_legendre_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    if order < 1:
        raise ValueError(f"quad_order must be >= 1, got {order}")
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"dimension mismatch: expected points with {d} components, got shape {x.shape}")
    return x


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass
class MagneticField:
    """A magnetic 2-form with bounded smooth components on ``R^d``.

    ``b12(x)`` returns ``B_12`` at points ``x`` of shape ``(..., 2)`` and
    ``grad(x)`` its gradient with shape ``(..., 2)``.  ``constant`` is set for
    homogeneous fields, which lets the flux routines use closed forms.
    """

    d: int
    b12: Callable[[np.ndarray], np.ndarray] | None = None
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    constant: float | None = None
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.d == 1:
            self.b12, self.grad, self.constant = None, None, 0.0

    def component(self, j: int, k: int, x) -> np.ndarray:
        """``B_jk(x)``; antisymmetric by construction."""
        x = _as_points(x, self.d)
        if self.d == 1 or j == k:
            return np.zeros(x.shape[:-1])
        sign = 1.0 if (j, k) == (0, 1) else -1.0
        return sign * self.b12(x)

    def value(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        if self.d == 1:
            return np.zeros(x.shape[:-1])
        return np.broadcast_to(self.b12(x), x.shape[:-1])

    def gradient(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        if self.d == 1:
            return np.zeros(x.shape)
        return np.broadcast_to(self.grad(x), x.shape)

    @property
    def is_zero(self) -> bool:
        return self.d == 1 or self.constant == 0.0

    def translated(self, z) -> "MagneticField":
        """``tau_z B : x -> B(x + z)``."""
        z = np.asarray(z, dtype=float)
        if self.d == 1 or self.constant is not None:
            return self
        return MagneticField(self.d, lambda x: self.b12(x + z), lambda x: self.grad(x + z),
                             None, self.name, {**self.params, "shift": z.tolist()})

    def negated(self) -> "MagneticField":
        if self.d == 1:
            return self
        const = None if self.constant is None else -self.constant
        return MagneticField(self.d, lambda x: -self.b12(x), lambda x: -self.grad(x),
                             const, self.name, {**self.params, "negated": True})

    def sup_norm(self, grid) -> float:
        """Largest ``|B_12|`` on the configuration lattice (the BC surrogate)."""
        if self.d == 1:
            return 0.0
        return float(np.max(np.abs(self.value(grid.points()))))


def zero_field(d: int) -> MagneticField:
    if d == 1:
        return MagneticField(1, name="zero")
    return constant_field(0.0)


def constant_field(b: float) -> MagneticField:
    b = float(b)
    return MagneticField(
        2,
        lambda x: np.full(np.shape(x)[:-1], b),
        lambda x: np.zeros(np.shape(x)),
        constant=b, name="constant", params={"b": b})


def oscillatory_field(b0: float, b1: float) -> MagneticField:
    """``B_12(x) = b0 + b1 cos(x1) cos(x2)``, bounded with all derivatives."""
    b0, b1 = float(b0), float(b1)

    def b12(x):
        return b0 + b1 * np.cos(x[..., 0]) * np.cos(x[..., 1])

    def grad(x):
        return np.stack([-b1 * np.sin(x[..., 0]) * np.cos(x[..., 1]),
                         -b1 * np.cos(x[..., 0]) * np.sin(x[..., 1])], axis=-1)

    return MagneticField(2, b12, grad, None, "oscillatory", {"b0": b0, "b1": b1})


@dataclass
class VectorPotential:
    """A 1-form ``A`` given by ``value(x) -> (..., d)``.

    ``jacobian(x)`` (optional) returns ``J[..., i, j] = d_i A_j``.  ``field``
    records the magnetic field the potential was built for, if known.
    """

    d: int
    func: Callable[[np.ndarray], np.ndarray]
    jacobian_func: Callable[[np.ndarray], np.ndarray] | None = None
    tag: str = "custom"
    field: MagneticField | None = None
    params: dict = dc_field(default_factory=dict)

    def value(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.broadcast_to(self.func(x), x.shape)

    def jacobian(self, x, eps: float = 1e-5) -> np.ndarray:
        x = _as_points(x, self.d)
        if self.jacobian_func is not None:
            return np.broadcast_to(self.jacobian_func(x), x.shape + (self.d,))
        rows = []
        for i in range(self.d):
            e = np.zeros(self.d)
            e[i] = eps
            rows.append((self.value(x + e) - self.value(x - e)) / (2 * eps))
        return np.stack(rows, axis=-2)

    def curl(self, x) -> np.ndarray:
        """``d_1 A_2 - d_2 A_1`` (zero in ``d = 1``)."""
        x = _as_points(x, self.d)
        if self.d == 1:
            return np.zeros(x.shape[:-1])
        J = self.jacobian(x)
        return J[..., 0, 1] - J[..., 1, 0]

    @property
    def is_zero(self) -> bool:
        return self.tag == "zero"


def zero_potential(d: int) -> VectorPotential:
    return VectorPotential(d, lambda x: np.zeros(np.shape(x)),
                           lambda x: np.zeros(np.shape(x) + (np.shape(x)[-1],)),
                           tag="zero", field=zero_field(d))


def symmetric_gauge(b: float) -> VectorPotential:
    """``A = (-b x2 / 2, b x1 / 2)``."""
    b = float(b)
    jac = np.array([[0.0, b / 2], [-b / 2, 0.0]])
    return VectorPotential(
        2, lambda x: np.stack([-0.5 * b * x[..., 1], 0.5 * b * x[..., 0]], axis=-1),
        lambda x: np.broadcast_to(jac, np.shape(x) + (2,)),
        tag="symmetric", field=constant_field(b), params={"b": b})


def landau_gauge(b: float) -> VectorPotential:
    """``A = (-b x2, 0)``."""
    b = float(b)
    jac = np.array([[0.0, 0.0], [-b, 0.0]])
    return VectorPotential(
        2, lambda x: np.stack([-b * x[..., 1], np.zeros(np.shape(x)[:-1])], axis=-1),
        lambda x: np.broadcast_to(jac, np.shape(x) + (2,)),
        tag="landau", field=constant_field(b), params={"b": b})


def poincare_gauge(B: MagneticField, quad_order: int = DEFAULT_QUAD_ORDER) -> VectorPotential:
    """Transversal gauge ``A_j(x) = -sum_k x_k int_0^1 t B_jk(t x) dt``."""
    if B.d == 1:
        return zero_potential(1)
    t, w = gauss_legendre_01(quad_order)

    def moments(x, power):
        pts = t[:, None] * x[..., None, :]           # (..., q, 2)
        vals = B.value(pts)                           # (..., q)
        return np.sum(w * t ** power * vals, axis=-1)

    def func(x):
        m1 = moments(x, 1)
        return np.stack([-x[..., 1] * m1, x[..., 0] * m1], axis=-1)

    def jac(x):
        pts = t[:, None] * x[..., None, :]
        m1 = np.sum(w * t * B.value(pts), axis=-1)
        g2 = np.sum((w * t ** 2)[:, None] * B.gradient(pts), axis=-2)  # int t^2 grad B(tx)
        J = np.empty(x.shape + (2,))
        # d_i A_1 = -delta_i2 m1 - x2 int t^2 d_i B ; d_i A_2 = delta_i1 m1 + x1 int t^2 d_i B
        J[..., 0, 0] = -x[..., 1] * g2[..., 0]
        J[..., 1, 0] = -m1 - x[..., 1] * g2[..., 1]
        J[..., 0, 1] = m1 + x[..., 0] * g2[..., 0]
        J[..., 1, 1] = x[..., 0] * g2[..., 1]
        return J

    return VectorPotential(2, func, jac, tag="poincare", field=B,
                           params={"quad_order": quad_order, **B.params})


@dataclass
class GaugeFunction:
    """Scalar gauge ``phi`` with gradient (and optionally Hessian)."""

    d: int
    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def value(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.broadcast_to(self.func(x), x.shape[:-1])

    def gradient(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.broadcast_to(self.grad(x), x.shape)


def quadratic_gauge(H, g=None, c: float = 0.0) -> GaugeFunction:
    """``phi(x) = c + <g, x> + x^T H x / 2`` with symmetric ``H``."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    H = 0.5 * (H + H.T)
    d = H.shape[0]
    g = np.zeros(d) if g is None else np.asarray(g, dtype=float)
    return GaugeFunction(
        d,
        lambda x: c + x @ g + 0.5 * np.einsum("...i,ij,...j->...", x, H, x),
        lambda x: g + x @ H,
        lambda x: np.broadcast_to(H, np.shape(x) + (d,)),
        name="quadratic")


def gauge_shift(A: VectorPotential, phi: GaugeFunction) -> VectorPotential:
    """``A' = A + d phi``; generates the same magnetic field."""
    if A.d != phi.d:
        raise ValueError("dimension mismatch between potential and gauge function")
    jac = None
    if A.jacobian_func is not None and phi.hessian is not None:
        def jac(x):
            return A.jacobian(x) + phi.hessian(x)
    return VectorPotential(A.d, lambda x: A.value(x) + phi.gradient(x), jac,
                           tag=f"{A.tag}+dphi", field=A.field,
                           params={**A.params, "gauge": phi.name})


def line_integral(A: VectorPotential, x, z, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``int_[x,z] A`` by Gauss-Legendre quadrature along the segment."""
    x = _as_points(x, A.d)
    z = _as_points(z, A.d)
    x, z = np.broadcast_arrays(x, z)
    t, w = gauss_legendre_01(quad_order)
    v = z - x
    pts = x[..., None, :] + t[:, None] * v[..., None, :]
    vals = A.value(pts)
    return np.einsum("q,...qj,...j->...", w, vals, v)


def line_phase(A: VectorPotential, x, z, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``Lambda^A(x, z) = exp(-i int_[x,z] A)``."""
    if A.is_zero:
        x = _as_points(x, A.d)
        z = _as_points(z, A.d)
        return np.ones(np.broadcast_shapes(x.shape, z.shape)[:-1], dtype=complex)
    return np.exp(-1j * line_integral(A, x, z, quad_order))


def triangle_flux_integral(B: MagneticField, x, y, z, quad_order: int = DEFAULT_QUAD_ORDER,
                           closed_form: bool = True) -> np.ndarray:
    """``int_<x,y,z> B`` over the oriented triangle.

    Uses the Duffy map ``(u, v) = (s, (1 - s) t)`` of the unit square onto the
    simplex with a tensor Gauss-Legendre rule.  Homogeneous fields use the
    closed form ``b det(y - x, z - x) / 2`` unless ``closed_form`` is False.
    """
    x = _as_points(x, B.d)
    y = _as_points(y, B.d)
    z = _as_points(z, B.d)
    x, y, z = np.broadcast_arrays(x, y, z)
    if B.d == 1:
        return np.zeros(x.shape[:-1])
    det = _cross(y - x, z - x)
    if B.constant is not None and closed_form:
        return 0.5 * B.constant * det
    s, ws = gauss_legendre_01(quad_order)
    S, T = np.meshgrid(s, s, indexing="ij")
    W = (ws[:, None] * ws[None, :]) * (1.0 - S)
    u = S.ravel()
    v = ((1.0 - S) * T).ravel()
    pts = (x[..., None, :] + u[:, None] * (y - x)[..., None, :]
           + v[:, None] * (z - x)[..., None, :])
    vals = B.value(pts)
    return det * np.sum(W.ravel() * vals, axis=-1)


def triangle_flux(B: MagneticField, x, y, z, quad_order: int = DEFAULT_QUAD_ORDER,
                  closed_form: bool = True) -> np.ndarray:
    """``Omega^B(x, y, z) = exp(-i int_<x,y,z> B)``."""
    return np.exp(-1j * triangle_flux_integral(B, x, y, z, quad_order, closed_form))


def omega_centered(B: MagneticField, x, y, z, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """``omega^B(x, y, z) = Omega^B(x - y - z, x + y - z, x - y + z)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    return triangle_flux(B, x - y - z, x + y - z, x - y + z, quad_order)


def parallelogram_flux(B: MagneticField, z, x, y, quad_order: int = DEFAULT_QUAD_ORDER,
                       closed_form: bool = True) -> np.ndarray:
    """``S^B_z(x, y) = -sum_{j != k} y_j z_k int_{-1/2}^{1/2} ds int_0^1 dt B_jk(x + s y + t z)``.

    This is the flux through the oriented parallelogram
    ``x + y/2 -> x - y/2 -> x - y/2 + z -> x + y/2 + z``.
    """
    x = _as_points(x, B.d)
    y = _as_points(y, B.d)
    z = _as_points(z, B.d)
    x, y, z = np.broadcast_arrays(x, y, z)
    if B.d == 1:
        return np.zeros(x.shape[:-1])
    wedge = _cross(y, z)
    if B.constant is not None and closed_form:
        return -B.constant * wedge
    s, ws = gauss_legendre_01(quad_order)
    S, T = np.meshgrid(s - 0.5, s, indexing="ij")
    W = (ws[:, None] * ws[None, :]).ravel()
    pts = (x[..., None, :] + S.ravel()[:, None] * y[..., None, :]
           + T.ravel()[:, None] * z[..., None, :])
    avg = np.sum(W * B.value(pts), axis=-1)
    return -wedge * avg
