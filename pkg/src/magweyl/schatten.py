"""Singular values, Schatten norms and the bound-verification harness.

Phase-space averages use the measure ``dX / (2 pi)^d``; with it the
Hilbert-Schmidt identity is an isometry and Kato's operator average has
constant 1.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .bessel import elliptic_multiplier
from .geometry import DEFAULT_QUAD_ORDER, GaugeFunction, VectorPotential, gauge_shift
from .grid import PLAIN, WEYL, PhaseGrid, lp_norm, multi_indices, sample
from .moyal import DEFAULT_NODE_BUDGET, QuadratureBudgetError, ZLattice, discrete_convolution, weyl_average
from .quantize import OperatorMatrix, op_matrix

SVD_SIZE_LIMIT = 1296
TRACE_TAIL_THRESHOLD = 1e-6


class SizeLimitError(ValueError):
    """Matrix too large for a dense SVD."""


class TraceClassError(ValueError):
    """Singular values do not decay fast enough to count as trace class."""


def _matrix(M) -> np.ndarray:
    return M.matrix if isinstance(M, OperatorMatrix) else np.asarray(M)


def check_size(N: int) -> None:
    if N > SVD_SIZE_LIMIT:
        raise SizeLimitError(f"matrix dimension {N} exceeds the dense SVD ceiling {SVD_SIZE_LIMIT}")


def singular_values(M) -> np.ndarray:
    """Singular values in descending order."""
    m = _matrix(M)
    check_size(max(m.shape))
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return scipy.linalg.svdvals(m)


def schatten_norm(M, p: float, sv: np.ndarray | None = None) -> float:
    """``(sum mu_n^p)^{1/p}``; ``p = inf`` gives the operator norm."""
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mu = singular_values(M) if sv is None else np.asarray(sv)
    if mu.size == 0:
        return 0.0
    if np.isinf(p):
        return float(mu[0])
    top = mu[0]
    if top == 0:
        return 0.0
    # scale to avoid overflow for large p
    return float(top * np.sum((mu / top) ** p) ** (1.0 / p))


def trace_tail_fraction(sv: np.ndarray) -> float:
    total = float(np.sum(sv))
    if total == 0:
        return 0.0
    return float(np.sum(sv[len(sv) // 2:]) / total)


def require_trace_class(sv: np.ndarray, threshold: float = TRACE_TAIL_THRESHOLD) -> None:
    frac = trace_tail_fraction(sv)
    if frac >= threshold:
        raise TraceClassError(
            f"singular-value tail beyond index {len(sv) // 2} carries {frac:.3g} of the total (threshold {threshold})")


def compactness_index(sv: np.ndarray, level: float = 1e-3) -> int | None:
    """First index with ``mu_n < level * mu_0`` (None if never reached)."""
    if sv.size == 0 or sv[0] == 0:
        return 0
    hits = np.nonzero(sv < level * sv[0])[0]
    return int(hits[0]) if hits.size else None


def phase_measure(d: int) -> float:
    """Density of ``dX / (2 pi)^d`` relative to Lebesgue measure."""
    return (2 * np.pi) ** (-d)


def hs_identity_check(F, A: VectorPotential, grid: PhaseGrid,
                      quad_order: int = DEFAULT_QUAD_ORDER) -> tuple[float, float, float]:
    """``(||Op^A F||_B2, ||F||_{L^2(dX/(2pi)^d)}, relative error)``."""
    lhs = float(np.linalg.norm(op_matrix(F, A, grid, quad_order).matrix))
    rhs = np.sqrt(phase_measure(grid.d)) * lp_norm(sample(F, grid, WEYL), 2)
    if rhs == 0:
        return lhs, 0.0, 0.0 if lhs == 0 else np.inf
    return lhs, float(rhs), abs(lhs - rhs) / rhs


def lattice_lp_norm(values: np.ndarray, weight: float, p: float) -> float:
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a ** p) * weight) ** (1.0 / p))


def kato_average(phi, T, A: VectorPotential, zlat: ZLattice, grid: PhaseGrid,
                 quad_order: int = DEFAULT_QUAD_ORDER,
                 max_nodes: float = DEFAULT_NODE_BUDGET) -> OperatorMatrix:
    """``phi{T} = sum_Z phi(Z) W^A(Z)^* T W^A(Z) dZ / (2 pi)^d``."""
    cost = float(zlat.size) * grid.size ** 2
    if cost > max_nodes:
        raise QuadratureBudgetError(f"Kato average needs {cost:.3g} node evaluations, budget is {max_nodes:.3g}")
    Tm = _matrix(T)
    coeffs = zlat.sample(phi) * (zlat.weight * phase_measure(grid.d))
    return OperatorMatrix(grid, weyl_average(coeffs, lambda z: Tm, zlat, A, grid, quad_order))


def phi_norm(phi, zlat: ZLattice, p: float) -> float:
    """``||phi||_{L^p(dX/(2pi)^d)}`` on the Z lattice."""
    return lattice_lp_norm(zlat.sample(phi), zlat.weight * phase_measure(zlat.grid.d), p)


def kato_ratios(phi, T, A: VectorPotential, zlat: ZLattice, grid: PhaseGrid,
                ps: Sequence[float] = (1.0, 2.0, np.inf),
                quad_order: int = DEFAULT_QUAD_ORDER) -> dict[float, float]:
    """``||phi{T}||_Bp / (||phi||_Lp ||T||_B1)`` for each ``p``."""
    avg = kato_average(phi, T, A, zlat, grid, quad_order)
    sv = singular_values(avg)
    t1 = schatten_norm(T, 1)
    out = {}
    for p in ps:
        denom = phi_norm(phi, zlat, p) * t1
        out[float(p)] = schatten_norm(avg, p, sv) / denom if denom else 0.0
    return out


def convolution_bound_check(f, F, A: VectorPotential, p: float, grid: PhaseGrid,
                            zlat: ZLattice, quad_order: int = DEFAULT_QUAD_ORDER) -> tuple[float, float, float]:
    """``||Op^A(f * F)||_Bp`` against ``||f||_Lp ||Op^A F||_B1``."""
    opF = op_matrix(F, A, grid, quad_order)
    svF = singular_values(opF)
    require_trace_class(svF)
    conv = discrete_convolution(f, F, zlat, grid, normalization=phase_measure(grid.d))
    lhs = schatten_norm(op_matrix(conv, A, grid, quad_order), p)
    rhs = phi_norm(f, zlat, p) * schatten_norm(opF, 1, svF)
    return lhs, rhs, (lhs / rhs if rhs else 0.0)


def gauge_invariance_check(F, A: VectorPotential, phi: GaugeFunction, grid: PhaseGrid,
                           quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    """Max deviation of sorted singular values, relative to the largest one."""
    s1 = singular_values(op_matrix(F, A, grid, quad_order))
    s2 = singular_values(op_matrix(F, gauge_shift(A, phi), grid, quad_order))
    if s1[0] == 0:
        return float(np.abs(s2).max())
    return float(np.abs(s1 - s2).max() / s1[0])


def gauge_conjugation_residual(F, A: VectorPotential, phi: GaugeFunction, grid: PhaseGrid,
                               quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    """``max |Op^{A + d phi} F - U Op^A F U^*|`` with ``U = diag(exp(i phi))``."""
    M1 = op_matrix(F, A, grid, quad_order).matrix
    M2 = op_matrix(F, gauge_shift(A, phi), grid, quad_order).matrix
    u = np.exp(1j * phi.value(grid.points()))
    return float(np.abs(M2 - u[:, None] * M1 * u.conj()[None, :]).max())


@dataclass(frozen=True)
class DerivativeBudget:
    """Derivative orders ``(s(d), t(d))`` of the Schatten bound."""

    d: int

    @property
    def s_d(self) -> int:
        return 2 * (self.d // 2) + 2

    @property
    def t_d(self) -> int:
        return self.d + self.d // 2 + 1


def derivative_norm_sums(F, grid: PhaseGrid, ps: Sequence[float], s: int, t: int) -> dict[float, float]:
    """``sum_{|a| <= s, |b| <= t} ||d_x^a d_xi^b F||_{L^p}`` on the plain lattice, per ``p``."""
    if s + t > F.max_order:
        raise ValueError(f"derivative order {s + t} exceeds declared maximum {F.max_order}")
    x, xi = grid.mesh(PLAIN)
    shape = grid.field_shape(PLAIN)
    weight = grid.w_x * grid.w_xi
    totals = {float(p): 0.0 for p in ps}
    for na in range(s + 1):
        for a in multi_indices(grid.d, na):
            for nb in range(t + 1):
                for b in multi_indices(grid.d, nb):
                    vals = np.broadcast_to(F.derivative(a, b, x, xi), shape)
                    for p in totals:
                        totals[p] += lattice_lp_norm(vals, weight, p)
    return totals


def derivative_norm_sum(F, grid: PhaseGrid, p: float, s: int, t: int) -> float:
    return derivative_norm_sums(F, grid, [p], s, t)[float(p)]


@dataclass
class BoundRow:
    member: str
    params: dict
    p: float
    schatten: float
    derivative_sum: float
    ratio: float
    multiplier_norm: float
    multiplier_ratio: float


@dataclass
class SchattenReport:
    experiment: str
    gauge: str
    grid: dict
    budget: tuple[int, int]
    rows: list[BoundRow] = field(default_factory=list)
    singular_values: dict[str, list[float]] = field(default_factory=dict)
    compactness: dict[str, int | None] = field(default_factory=dict)
    runtimes: dict[str, float] = field(default_factory=dict)

    def family_constants(self) -> dict[float, float]:
        """Largest ratio per ``p`` across the family."""
        out: dict[float, float] = {}
        for r in self.rows:
            out[r.p] = max(out.get(r.p, 0.0), r.ratio)
        return out

    def all_finite(self) -> bool:
        return all(np.isfinite(r.ratio) and np.isfinite(r.multiplier_ratio) for r in self.rows)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and np.isinf(v):
                return "inf"
            return v
        rows = [{k: enc(v) for k, v in asdict(r).items()} for r in self.rows]
        return {"experiment": self.experiment, "gauge": self.gauge, "grid": self.grid,
                "budget": list(self.budget), "rows": rows,
                "family_constants": {str(k): v for k, v in self.family_constants().items()},
                "compactness_index": self.compactness, "runtimes": self.runtimes}

    def write(self, out_dir: str | Path) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / "schatten_report.json", out_dir / "schatten_bounds.csv",
                 out_dir / "singular_values.csv"]
        paths[0].write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["member", "p", "schatten", "derivative_sum", "ratio",
                        "multiplier_norm", "multiplier_ratio"])
            for r in self.rows:
                w.writerow([r.member, r.p, repr(r.schatten), repr(r.derivative_sum), repr(r.ratio),
                            repr(r.multiplier_norm), repr(r.multiplier_ratio)])
        with open(paths[2], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["member", "index", "singular_value"])
            for name, sv in self.singular_values.items():
                for i, v in enumerate(sv):
                    w.writerow([name, i, repr(float(v))])
        return paths


def theorem_bound_report(family: Sequence, A: VectorPotential, ps: Sequence[float], grid: PhaseGrid,
                         experiment: str = "theorem-bounds",
                         quad_order: int = DEFAULT_QUAD_ORDER) -> SchattenReport:
    """Schatten norms against derivative sums for every member and ``p``."""
    check_size(grid.size)
    budget = DerivativeBudget(grid.d)
    report = SchattenReport(experiment, A.tag, {"d": grid.d, "n": grid.n, "L": grid.L},
                            (budget.s_d, budget.t_d))
    for i, F in enumerate(family):
        name = f"{F.family}[{i}]"
        t0 = time.perf_counter()
        sv = singular_values(op_matrix(F, A, grid, quad_order))
        field_ = sample(F, grid, PLAIN)
        lifted = elliptic_multiplier(field_, budget.s_d, budget.t_d)
        sums = derivative_norm_sums(F, grid, ps, budget.s_d, budget.t_d)
        for p in ps:
            p = float(p)
            lhs = schatten_norm(None, p, sv)
            rhs = sums[p]
            mult = lp_norm(lifted, p)
            report.rows.append(BoundRow(name, dict(F.params), p, lhs, rhs,
                                        lhs / rhs if rhs else 0.0, mult,
                                        lhs / mult if mult else 0.0))
        report.singular_values[name] = sv.tolist()
        report.compactness[name] = compactness_index(sv)
        report.runtimes[name] = time.perf_counter() - t0
    return report
