"""Phase-space lattices, quadrature weights and discrete norms.

Normalization table (per axis; products over the ``d`` axes):

=====================  ==========================  ==========================
lattice                points                      weight
=====================  ==========================  ==========================
configuration ``x``    ``-L + h a``, a < n          ``h = 2L/n``
plain dual ``xi``      ``k j``, -n/2 <= j < n/2     ``k = pi/L``  (h k n = 2 pi)
refined ``x``          ``-L + (h/2) s``, s < 2n     ``h/2``
Weyl dual ``xi``       ``(k/2) j``, -n <= j < n     ``k/2``
=====================  ==========================  ==========================

The unitary Fourier transform is ``(2 pi)^{-d/2} int e^{i<xi,y>} phi(y) dy``.
The Weyl kernel map carries ``(2 pi)^{-d}`` and is discretized on the refined
x lattice times the Weyl dual lattice: midpoints ``(x_a + x_b)/2`` are exactly
the refined points ``s = a + b`` and the kernel is ``4L``-periodic in ``x - y``,
so no pair of lattice points is aliased.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PLAIN = "plain"
WEYL = "weyl"


@dataclass(frozen=True)
class PhaseGrid:
    """Truncated phase space ``[-L, L)^d x [-pi/h, pi/h)^d``."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if int(self.n) != self.n or self.n % 2:
            raise ValueError(f"n must be even, got {self.n}")
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"x_extent must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def k(self) -> float:
        return np.pi / self.L

    @property
    def w_x(self) -> float:
        return self.h ** self.d

    @property
    def w_xi(self) -> float:
        return self.k ** self.d

    @property
    def size(self) -> int:
        """Dimension of grid-L^2, i.e. ``n^d``."""
        return self.n ** self.d

    # one-dimensional axes
    def x_axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def xi_axis(self) -> np.ndarray:
        return self.k * np.arange(-self.n // 2, self.n // 2)

    def refined_axis(self) -> np.ndarray:
        return -self.L + 0.5 * self.h * np.arange(2 * self.n)

    def weyl_xi_axis(self) -> np.ndarray:
        return 0.5 * self.k * np.arange(-self.n, self.n)

    def axes(self, lattice: str = PLAIN) -> tuple[np.ndarray, np.ndarray]:
        if lattice == PLAIN:
            return self.x_axis(), self.xi_axis()
        if lattice == WEYL:
            return self.refined_axis(), self.weyl_xi_axis()
        raise ValueError(f"unknown lattice {lattice!r}")

    def steps(self, lattice: str = PLAIN) -> tuple[float, float]:
        if lattice == PLAIN:
            return self.h, self.k
        if lattice == WEYL:
            return 0.5 * self.h, 0.5 * self.k
        raise ValueError(f"unknown lattice {lattice!r}")

    def points(self) -> np.ndarray:
        """Configuration lattice as an ``(n^d, d)`` array in row-major order."""
        ax = self.x_axis()
        mesh = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def mesh(self, lattice: str = PLAIN) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
        """Broadcastable ``(x, xi)`` component tuples of shape ``(m,)*d + (p,)*d``."""
        xa, pa = self.axes(lattice)
        d = self.d
        x = []
        xi = []
        for j in range(d):
            sx = [1] * (2 * d)
            sx[j] = len(xa)
            x.append(xa.reshape(sx))
            sp = [1] * (2 * d)
            sp[d + j] = len(pa)
            xi.append(pa.reshape(sp))
        return tuple(x), tuple(xi)

    def field_shape(self, lattice: str = PLAIN) -> tuple[int, ...]:
        xa, pa = self.axes(lattice)
        return (len(xa),) * self.d + (len(pa),) * self.d

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "n": self.n, "L": self.L})

    @classmethod
    def from_json(cls, text: str) -> "PhaseGrid":
        obj = json.loads(text)
        return cls(int(obj["d"]), int(obj["n"]), float(obj["L"]))


def make_grid(d: int, n_per_axis: int, x_extent: float) -> PhaseGrid:
    return PhaseGrid(int(d), int(n_per_axis), float(x_extent))


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape:
            raise ValueError("x and xi must have the same dimension")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("phase point components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def d(self) -> int:
        return self.x.shape[0]

    def __neg__(self) -> "PhasePoint":
        return PhasePoint(-self.x, -self.xi)


def symplectic_form(X: PhasePoint, Y: PhasePoint) -> float:
    """``sigma(X, Y) = <xi, y> - <eta, x>``."""
    if X.d != Y.d:
        raise ValueError(f"dimension mismatch: {X.d} vs {Y.d}")
    return float(np.dot(X.xi, Y.x) - np.dot(Y.xi, X.x))


@dataclass
class SymbolField:
    """Samples of a symbol on one of the grid's phase-space lattices.

    ``values`` has shape ``grid.field_shape(lattice)``: the first ``d`` axes
    index position, the last ``d`` axes index momentum.
    """

    grid: PhaseGrid
    values: np.ndarray
    lattice: str = WEYL

    def __post_init__(self):
        self.values = np.asarray(self.values)
        expected = self.grid.field_shape(self.lattice)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} does not match {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite samples")

    @property
    def weight(self) -> float:
        hx, hp = self.grid.steps(self.lattice)
        return (hx * hp) ** self.grid.d

    def with_values(self, values: np.ndarray) -> "SymbolField":
        return SymbolField(self.grid, values, self.lattice)


def sample(F, grid: PhaseGrid, lattice: str = WEYL) -> SymbolField:
    """Evaluate a symbol (anything callable as ``F(x, xi)``) on a lattice."""
    x, xi = grid.mesh(lattice)
    vals = np.broadcast_to(F(x, xi), grid.field_shape(lattice))
    return SymbolField(grid, np.array(vals, dtype=complex), lattice)


def lp_norm(field: SymbolField, p: float) -> float:
    """Riemann-sum ``L^p`` norm with Lebesgue weights ``dx dxi``."""
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(field.values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a ** p) * field.weight) ** (1.0 / p))


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices in ``d`` variables with ``|alpha| == order``."""
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) == order]


def japanese(v: Sequence[np.ndarray]) -> np.ndarray:
    """``<v> = sqrt(1 + |v|^2)`` for a tuple of components."""
    return np.sqrt(1.0 + sum(np.square(c) for c in v))


def hoermander_seminorm(F, m: float, N: int, M: int, grid: PhaseGrid,
                        lattice: str = PLAIN) -> float:
    """Grid maximum of ``<xi>^{-m} sum_{|a|=N,|b|=M} |d_x^a d_xi^b F|``."""
    if N + M > F.max_order:
        raise ValueError(f"derivative order {N + M} exceeds declared maximum {F.max_order}")
    x, xi = grid.mesh(lattice)
    total = np.zeros(grid.field_shape(lattice))
    for a in multi_indices(grid.d, N):
        for b in multi_indices(grid.d, M):
            total = total + np.abs(np.broadcast_to(F.derivative(a, b, x, xi), total.shape))
    return float(np.max(japanese(xi) ** (-m) * total))


def _angular_axes(grid: PhaseGrid, lattice: str) -> tuple[np.ndarray, np.ndarray]:
    xa, pa = grid.axes(lattice)
    hx, hp = grid.steps(lattice)
    # origin-centred FFT frequencies of each axis
    fx = 2 * np.pi * np.fft.fftfreq(len(xa), d=hx)
    fp = 2 * np.pi * np.fft.fftfreq(len(pa), d=hp)
    return fx, fp


def fourier_multiplier(field: SymbolField, mult_x, mult_xi) -> SymbolField:
    """Apply ``mult_x(freq) (x) mult_xi(freq)`` as a periodic Fourier multiplier.

    ``mult_x`` acts on the frequencies dual to position, ``mult_xi`` on those
    dual to momentum; each receives a tuple of ``d`` broadcastable arrays.
    """
    d = field.grid.d
    fx, fp = _angular_axes(field.grid, field.lattice)
    axes = tuple(range(2 * d))
    comps_x, comps_p = [], []
    for j in range(d):
        s = [1] * (2 * d)
        s[j] = len(fx)
        comps_x.append(fx.reshape(s))
        s = [1] * (2 * d)
        s[d + j] = len(fp)
        comps_p.append(fp.reshape(s))
    coeffs = np.fft.fftn(np.fft.ifftshift(field.values, axes=axes), axes=axes)
    coeffs = coeffs * mult_x(tuple(comps_x)) * mult_xi(tuple(comps_p))
    out = np.fft.fftshift(np.fft.ifftn(coeffs, axes=axes), axes=axes)
    return field.with_values(out)


def spectral_derivative(field: SymbolField, alpha: Sequence[int], beta: Sequence[int]) -> SymbolField:
    """Fourier-multiplier derivative ``d_x^alpha d_xi^beta``.

    Exact on discrete trigonometric polynomials of the lattice; for other
    fields the periodic extension is differentiated, so anything that is not
    small at the box edges aliases.
    """
    def mx(c):
        out = 1.0
        for cj, aj in zip(c, alpha):
            out = out * (1j * cj) ** aj
        return out

    def mp(c):
        out = 1.0
        for cj, bj in zip(c, beta):
            out = out * (1j * cj) ** bj
        return out

    return fourier_multiplier(field, mx, mp)
