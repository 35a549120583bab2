"""Evaluatable symbols with exact partial derivatives.

A symbol is called as ``F(x, xi)`` where ``x`` and ``xi`` are tuples of ``d``
mutually broadcastable arrays (one per component).
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.special import eval_hermite


class SymbolFn:
    """A symbol ``F(x, xi)`` together with its partial derivatives.

    Parameters
    ----------
    d : int
        Configuration dimension.
    func : callable
        ``func(x, xi)`` returning complex (or real) samples.
    deriv : callable, optional
        ``deriv(alpha, beta, x, xi)`` for multi-indices up to ``max_order``
        in total. Omitted means no derivatives are available.
    max_order : int
        Largest supported ``|alpha| + |beta|``.
    order : float
        Declared symbol order ``m`` (informational).
    family : str
        Family tag recorded in reports.
    """

    def __init__(self, d: int, func: Callable, deriv: Callable | None = None,
                 max_order: int = 0, order: float = 0.0, family: str = "custom",
                 params: dict | None = None):
        self.d = d
        self._func = func
        self._deriv = deriv
        self.max_order = max_order if deriv is not None else 0
        self.order = order
        self.family = family
        self.params = dict(params or {})

    def __call__(self, x, xi):
        return self._func(tuple(x), tuple(xi))

    def derivative(self, alpha: Sequence[int], beta: Sequence[int], x, xi):
        alpha, beta = tuple(alpha), tuple(beta)
        if len(alpha) != self.d or len(beta) != self.d:
            raise ValueError("multi-index length must equal d")
        total = sum(alpha) + sum(beta)
        if total == 0:
            return self(x, xi)
        if total > self.max_order:
            raise ValueError(f"derivative order {total} exceeds declared maximum {self.max_order}")
        return self._deriv(alpha, beta, tuple(x), tuple(xi))

    def shifted(self, z: Sequence[float], zeta: Sequence[float]) -> "SymbolFn":
        """``tau_Z F : X -> F(X + Z)``."""
        z = np.asarray(z, dtype=float)
        zeta = np.asarray(zeta, dtype=float)

        def move(x, xi):
            return tuple(c + z[j] for j, c in enumerate(x)), tuple(c + zeta[j] for j, c in enumerate(xi))

        def func(x, xi):
            return self._func(*move(x, xi))

        deriv = None
        if self._deriv is not None:
            def deriv(a, b, x, xi):
                return self._deriv(a, b, *move(x, xi))
        return SymbolFn(self.d, func, deriv, self.max_order, self.order,
                        self.family, {**self.params, "shift": (z.tolist(), zeta.tolist())})

    def scaled(self, c: complex) -> "SymbolFn":
        deriv = None
        if self._deriv is not None:
            def deriv(a, b, x, xi):
                return c * self._deriv(a, b, x, xi)
        return SymbolFn(self.d, lambda x, xi: c * self._func(x, xi), deriv,
                        self.max_order, self.order, self.family, {**self.params, "scale": c})

    def conjugate(self) -> "SymbolFn":
        deriv = None
        if self._deriv is not None:
            def deriv(a, b, x, xi):
                return np.conj(self._deriv(a, b, x, xi))
        return SymbolFn(self.d, lambda x, xi: np.conj(self._func(x, xi)), deriv,
                        self.max_order, self.order, self.family, self.params)

    def __repr__(self):
        return f"SymbolFn(d={self.d}, family={self.family!r}, params={self.params})"


def constant(value: complex, d: int) -> SymbolFn:
    def func(x, xi):
        return np.full(np.broadcast(*x, *xi).shape, value, dtype=complex)

    def deriv(a, b, x, xi):
        return np.zeros(np.broadcast(*x, *xi).shape, dtype=complex)

    return SymbolFn(d, func, deriv, max_order=64, order=0.0, family="constant",
                    params={"value": value})


def _gauss_1d_derivative(order: int, u, a: float):
    # d^n/du^n exp(-a u^2) = (-sqrt a)^n H_n(sqrt(a) u) exp(-a u^2)
    ra = np.sqrt(a)
    return (-ra) ** order * eval_hermite(order, ra * u) * np.exp(-a * u * u)


def gaussian(d: int, a: float = 0.5, c: float | None = None,
             x0: Sequence[float] | None = None, xi0: Sequence[float] | None = None,
             amplitude: complex = 1.0) -> SymbolFn:
    """``amplitude * exp(-a |x - x0|^2 - c |xi - xi0|^2)``; ``c`` defaults to ``a``."""
    c = a if c is None else c
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    xi0 = np.zeros(d) if xi0 is None else np.asarray(xi0, dtype=float)

    def func(x, xi):
        e = sum(a * (x[j] - x0[j]) ** 2 + c * (xi[j] - xi0[j]) ** 2 for j in range(d))
        return amplitude * np.exp(-e)

    def deriv(al, be, x, xi):
        out = amplitude
        for j in range(d):
            out = out * _gauss_1d_derivative(al[j], x[j] - x0[j], a)
            out = out * _gauss_1d_derivative(be[j], xi[j] - xi0[j], c)
        return out

    return SymbolFn(d, func, deriv, max_order=40, order=-np.inf, family="gaussian",
                    params={"a": a, "c": c, "x0": x0.tolist(), "xi0": xi0.tolist(),
                            "amplitude": amplitude})


def dilated_gaussian(d: int, lam: float) -> SymbolFn:
    """``exp(-lam (|x|^2 + |xi|^2))``, the dilation family of the bound reports."""
    g = gaussian(d, a=lam, c=lam)
    g.family = "dilated_gaussian"
    g.params = {"lambda": lam}
    return g


def sympy_variables(d: int):
    xs = sp.symbols(" ".join(f"x{j + 1}" for j in range(d)), real=True, seq=True)
    ps = sp.symbols(" ".join(f"xi{j + 1}" for j in range(d)), real=True, seq=True)
    return tuple(xs), tuple(ps)


def from_sympy(expr, d: int, order: float = 0.0, family: str = "sympy",
               max_order: int = 12, params: dict | None = None) -> SymbolFn:
    """Build a symbol from a sympy expression in ``x1..xd, xi1..xid``.

    Derivatives are differentiated symbolically and compiled on first use.
    """
    xs, ps = sympy_variables(d)
    if isinstance(expr, str):
        expr = sp.sympify(expr, locals={str(s): s for s in xs + ps})
    variables = xs + ps

    @lru_cache(maxsize=None)
    def compiled(key):
        alpha, beta = key[:d], key[d:]
        e = expr
        for v, m in zip(variables, alpha + beta):
            if m:
                e = sp.diff(e, v, m)
        return sp.lambdify(variables, e, modules="numpy")

    def evaluate(key, x, xi):
        vals = compiled(key)(*x, *xi)
        shape = np.broadcast(*x, *xi).shape
        return np.broadcast_to(np.asarray(vals, dtype=complex), shape).copy()

    zero = (0,) * (2 * d)
    return SymbolFn(d, lambda x, xi: evaluate(zero, x, xi),
                    lambda a, b, x, xi: evaluate(tuple(a) + tuple(b), x, xi),
                    max_order=max_order, order=order, family=family,
                    params={"expr": str(expr), **(params or {})})


def bracket_power(m: float, d: int) -> SymbolFn:
    """``<xi>^m``, an elliptic symbol of order ``m`` constant in ``x``."""
    _, ps = sympy_variables(d)
    expr = (1 + sum(p ** 2 for p in ps)) ** (sp.nsimplify(m) / 2)
    return from_sympy(expr, d, order=m, family="bracket_power", params={"m": m})


def position_only(func: Callable, d: int, family: str = "position") -> SymbolFn:
    """A symbol depending on ``x`` only; ``func`` takes the tuple of components."""
    return SymbolFn(d, lambda x, xi: np.broadcast_to(func(x), np.broadcast(*x, *xi).shape) + 0j,
                    None, 0, 0.0, family)
