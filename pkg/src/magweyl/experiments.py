"""Configuration-driven experiments, reports, manifests and plots."""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import __version__
from .bessel import bessel_kernel, near_origin_slope, reconstruct_check, write_profile_csv
from .geometry import (VectorPotential, constant_field, landau_gauge, line_phase, oscillatory_field,
                       poincare_gauge, quadratic_gauge, symmetric_gauge, triangle_flux,
                       zero_field, zero_potential)
from .grid import PLAIN, WEYL, PhaseGrid, PhasePoint, SymbolField, make_grid, sample
from .moyal import (DEFAULT_NODE_BUDGET, DirectQuadrature, ZLattice, discrete_convolution,
                    kato_convolution_expand, magnetic_translate, moyal_direct, moyal_kernel_route)
from .quantize import inverse_weyl, op_matrix, weyl_kernel, weyl_system_matrix, write_kernel
from .schatten import (SVD_SIZE_LIMIT, SizeLimitError, convolution_bound_check,
                       gauge_conjugation_residual, gauge_invariance_check, hs_identity_check,
                       kato_ratios, singular_values, theorem_bound_report)
from .symbols import constant, dilated_gaussian, from_sympy, gaussian

KINDS = ("flux-check", "quantize", "hs-identity", "moyal-check", "translate-check",
         "kato-check", "bessel", "theorem-bounds", "gauge-check", "kato-conv")

_NUMBER_OR_INF = {"oneOf": [{"type": "number"}, {"enum": ["inf"]}]}
_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}

_SYMBOL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["gaussian", "dilated_gaussian", "constant", "sympy"]},
        "a": {"type": "number", "exclusiveMinimum": 0},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "x0": _VEC,
        "xi0": _VEC,
        "amplitude": {"type": "number"},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "value": {"type": "number"},
        "expr": {"type": "string"},
        "order": {"type": "number"},
    },
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "magweyl experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "grid"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d", "n", "L"],
            "properties": {
                "d": {"enum": [1, 2]},
                "n": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "L": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["zero", "constant", "oscillatory"]},
                "b": {"type": "number"},
                "b0": {"type": "number"},
                "b1": {"type": "number"},
            },
        },
        "gauge": {"enum": ["zero", "symmetric", "landau", "poincare"]},
        "symbol": _SYMBOL,
        "symbol2": _SYMBOL,
        "weight": _SYMBOL,
        "p_list": {"type": "array", "items": _NUMBER_OR_INF, "minItems": 1},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quad_order": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 1},
                "box": {"type": "number", "exclusiveMinimum": 0},
                "translation": {
                    "type": "object", "additionalProperties": False,
                    "required": ["x", "xi"],
                    "properties": {"x": _VEC, "xi": _VEC},
                },
                "z_lattice": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "z_stride": {"type": "integer", "minimum": 1},
                        "zeta_stride": {"type": "integer", "minimum": 1},
                    },
                },
                "quadrature": {
                    "type": "object", "additionalProperties": False,
                    "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                                   for k in ("y_step", "y_extent", "eta_step", "eta_extent")},
                },
                "lambdas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "compare_gauges": {"type": "boolean"},
                "operator": {"enum": ["rank1", "symbol"]},
                "factorization": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
                "closed_form": {
                    "type": "object", "additionalProperties": False,
                    "required": ["n", "L"],
                    "properties": {"n": {"type": "integer", "minimum": 8},
                                   "L": {"type": "number", "exclusiveMinimum": 0}},
                },
                "slopes": {
                    "type": "array",
                    "items": {
                        "type": "object", "additionalProperties": False,
                        "required": ["d", "s", "n", "L", "r_min"],
                        "properties": {
                            "d": {"enum": [1, 2]}, "s": {"type": "number"},
                            "n": {"type": "integer", "minimum": 8},
                            "L": {"type": "number", "exclusiveMinimum": 0},
                            "r_min": {"type": "number", "exclusiveMinimum": 0},
                            "r_max": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
    },
}


class ConfigError(ValueError):
    """Config failed schema validation; ``pointer`` locates the offending entry."""

    def __init__(self, message: str, pointer: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def validate_config(cfg: dict) -> dict:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "".join(f"/{p}" for p in err.absolute_path)
        raise ConfigError(err.message, pointer)
    return cfg


def bundled_config_names() -> list[str]:
    root = resources.files("magweyl") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name: str | Path) -> dict:
    """Read a config file, or a bundled config by name."""
    path = Path(path_or_name)
    if path.exists():
        text = path.read_text()
    else:
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        res = resources.files("magweyl") / "configs" / f"{name}.json"
        if not res.is_file():
            raise FileNotFoundError(f"no config file or bundled config named {path_or_name!r}")
        text = res.read_text()
    return validate_config(json.loads(text))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# --------------------------------------------------------------------------
# builders

def _p(v) -> float:
    return float("inf") if v == "inf" else float(v)


def build_grid(cfg: dict) -> PhaseGrid:
    g = cfg["grid"]
    return make_grid(g["d"], g["n"], g["L"])


def build_field(cfg: dict, d: int):
    entry = cfg.get("field", {"type": "zero"})
    if d == 1 or entry["type"] == "zero":
        return zero_field(d)
    if entry["type"] == "constant":
        return constant_field(entry.get("b", 1.0))
    return oscillatory_field(entry.get("b0", 1.0), entry.get("b1", 0.5))


def build_potential(cfg: dict, d: int, gauge: str | None = None) -> VectorPotential:
    B = build_field(cfg, d)
    gauge = gauge or cfg.get("gauge", "symmetric" if B.constant is not None else "poincare")
    if d == 1 or B.is_zero or gauge == "zero":
        return zero_potential(d)
    if gauge == "poincare" or B.constant is None:
        return poincare_gauge(B)
    if gauge == "landau":
        return landau_gauge(B.constant)
    return symmetric_gauge(B.constant)


def build_symbol(entry: dict | None, d: int):
    entry = entry or {"family": "gaussian"}
    fam = entry["family"]
    if fam == "gaussian":
        return gaussian(d, entry.get("a", 0.5), entry.get("c"), entry.get("x0"), entry.get("xi0"),
                        entry.get("amplitude", 1.0))
    if fam == "dilated_gaussian":
        return dilated_gaussian(d, entry.get("lambda", 1.0))
    if fam == "constant":
        return constant(entry.get("value", 1.0), d)
    return from_sympy(entry["expr"], d, order=entry.get("order", 0.0))


def build_zlattice(cfg: dict, grid: PhaseGrid) -> ZLattice:
    z = cfg.get("options", {}).get("z_lattice", {})
    return ZLattice(grid, z.get("count", 9), z.get("z_stride", 1), z.get("zeta_stride", 1))


# --------------------------------------------------------------------------
# results

@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    relation: str = "<"
    passed: bool = False

    def __post_init__(self):
        v = float(self.value)
        self.value = v
        if not np.isfinite(v):
            self.passed = False
        elif self.relation == "<":
            self.passed = v < self.tolerance
        elif self.relation == "<=":
            self.passed = v <= self.tolerance
        else:
            self.passed = v > self.tolerance


@dataclass
class RunManifest:
    kind: str
    name: str
    config_hash: str
    code_version: str
    seed: int
    started: str
    finished: str
    runtime_s: float
    checks: list[Check] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    out_dir: str = ""
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        d = dict(d)
        d.pop("passed", None)
        checks = [Check(**{k: c[k] for k in ("name", "value", "tolerance", "relation")})
                  for c in d.pop("checks", [])]
        return cls(checks=checks, **d)


class _Ctx:
    """Per-run scratch: output directory, artifact list and metrics."""

    def __init__(self, cfg: dict, out_dir: Path, max_nodes: float):
        self.cfg = cfg
        self.out = out_dir
        self.max_nodes = max_nodes
        self.metrics: dict[str, Any] = {}
        self.checks: list[Check] = []
        self.artifacts: list[Path] = []
        self.rng = np.random.default_rng(cfg.get("seed", 0))

    def tol(self, name: str, default: float) -> float:
        return float(self.cfg.get("tolerances", {}).get(name, default))

    def check(self, name: str, value: float, default_tol: float, relation: str = "<") -> Check:
        c = Check(name, value, self.tol(name, default_tol), relation)
        self.checks.append(c)
        return c

    def opt(self, key: str, default=None):
        return self.cfg.get("options", {}).get(key, default)

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        self.artifacts.append(path)
        return path


# --------------------------------------------------------------------------
# runners

def _run_flux(ctx: _Ctx, grid: PhaseGrid) -> None:
    q = ctx.opt("quad_order", 16)
    n = ctx.opt("samples", 1000)
    box = ctx.opt("box", 3.0)
    if grid.d == 1:
        ctx.check("stokes_trivial_d1", 0.0, 1e-12)
        return
    spec = ctx.cfg.get("field", {"type": "constant", "b": 1.0})
    fields = {"constant": constant_field(spec.get("b", 1.0)),
              "oscillatory": oscillatory_field(spec.get("b0", 1.0), spec.get("b1", 0.5))}
    rows = []
    for name, B in fields.items():
        A = symmetric_gauge(B.constant) if B.constant is not None else poincare_gauge(B, q)
        x, y, z = ctx.rng.uniform(-box, box, size=(3, n, 2))
        omega = triangle_flux(B, x, y, z, q, closed_form=False)
        lam = line_phase(A, x, y, q) * line_phase(A, y, z, q) * line_phase(A, z, x, q)
        dev = float(np.abs(omega - lam).max())
        curl = float(np.abs(A.curl(x) - B.value(x)).max())
        ctx.check(f"stokes_{name}", dev, 1e-8)
        ctx.check(f"curl_{name}", curl, 1e-6)
        rows.append((name, dev, curl))
    ctx.write_csv("flux_deviation.csv", ["field", "max_stokes_deviation", "max_curl_residual"], rows)


def _run_quantize(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    F = build_symbol(ctx.cfg.get("symbol"), grid.d)
    M = op_matrix(F, A, grid)
    K = weyl_kernel(F, grid)
    back = weyl_kernel(inverse_weyl(K, grid), grid)
    ctx.check("inverse_weyl_roundtrip", np.abs(back - K).max() / np.abs(K).max(), 1e-12)
    ctx.artifacts.extend(write_kernel(M.kernel, ctx.out / "kernel"))
    sv = singular_values(M)
    ctx.write_csv("singular_values.csv", ["member", "index", "singular_value"],
                  [("symbol", i, float(v)) for i, v in enumerate(sv)])
    ctx.metrics["operator_norm"] = float(sv[0])


def _run_hs(ctx: _Ctx, grid: PhaseGrid) -> None:
    F = build_symbol(ctx.cfg.get("symbol"), grid.d)
    A = build_potential(ctx.cfg, grid.d)
    lhs, rhs, rel = hs_identity_check(F, A, grid)
    ctx.metrics.update({"lhs_B2": lhs, "rhs_L2": rhs})
    ctx.check("hs_relative_error", rel, 1e-6 if grid.d == 1 else 1e-5)
    rows = [(A.tag, lhs, rhs, rel)]
    if ctx.opt("compare_gauges", False) and grid.d == 2:
        other = build_potential(ctx.cfg, 2, "landau" if A.tag != "landau" else "symmetric")
        lhs2, _, rel2 = hs_identity_check(F, other, grid)
        rows.append((other.tag, lhs2, rhs, rel2))
        ctx.check("hs_gauge_difference", abs(lhs - lhs2) / lhs, 1e-10)
    ctx.write_csv("hs_identity.csv", ["gauge", "B2_norm", "L2_norm", "relative_error"], rows)


def _run_moyal(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    f = build_symbol(ctx.cfg.get("symbol"), grid.d)
    g = build_symbol(ctx.cfg.get("symbol2", ctx.cfg.get("symbol")), grid.d)
    quad = DirectQuadrature(**ctx.opt("quadrature", {}))
    P = op_matrix(f, A, grid).matrix @ op_matrix(g, A, grid).matrix
    pnorm = np.linalg.norm(P, 2)
    kr = moyal_kernel_route(f, g, A, grid)
    exact = np.linalg.norm(op_matrix(kr, A, grid).matrix - P, 2) / pnorm
    t0 = time.perf_counter()
    direct = moyal_direct(f, g, A.field, grid, quad, ctx.max_nodes)
    ctx.metrics["direct_runtime_s"] = time.perf_counter() - t0
    hom = np.linalg.norm(op_matrix(direct, A, grid).matrix - P, 2) / pnorm
    ctx.check("kernel_route_exact", exact, 1e-12)
    ctx.check("direct_homomorphism", hom, 1e-3)
    ctx.write_csv("moyal.csv", ["quantity", "value"],
                  [("kernel_route_residual", exact), ("direct_residual", hom)])


def _run_translate(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    g = build_symbol(ctx.cfg.get("symbol"), grid.d)
    tr = ctx.opt("translation", {"x": [grid.h] + [0.0] * (grid.d - 1), "xi": [0.0] * grid.d})
    Z = PhasePoint(tr["x"], tr["xi"])
    W = weyl_system_matrix(Z, A, grid)
    lhs = op_matrix(magnetic_translate(g, -Z, A.field, grid), A, grid).matrix
    rhs = W.conj().T @ op_matrix(g, A, grid).matrix @ W
    res = float(np.abs(lhs - rhs).max())
    plain = sample(g.shifted(Z.x, Z.xi), grid, WEYL).values
    witness = float(np.abs(magnetic_translate(g, Z, A.field, grid).values - plain).max())
    ctx.check("conjugation_residual", res, 1e-6)
    if not A.field.is_zero:
        ctx.check("magnetic_witness", witness, 1e-2, ">")
    ctx.write_csv("translate.csv", ["quantity", "value"],
                  [("conjugation_residual", res), ("witness", witness)])


def _rank_one(grid: PhaseGrid) -> np.ndarray:
    u = np.exp(-0.5 * np.sum(grid.points() ** 2, axis=1)).astype(complex)
    u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.w_x)
    return grid.w_x * np.outer(u, u.conj())


def _run_kato(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    zl = build_zlattice(ctx.cfg, grid)
    phi = build_symbol(ctx.cfg.get("weight"), grid.d)
    if ctx.opt("operator", "rank1") == "rank1":
        T = _rank_one(grid)
    else:
        T = op_matrix(build_symbol(ctx.cfg.get("symbol"), grid.d), A, grid).matrix
    ps = [_p(p) for p in ctx.cfg.get("p_list", [1, 2, "inf"])]
    ratios = kato_ratios(phi, T, A, zl, grid, ps)
    slack = ctx.tol("slack", 0.05)
    rows = []
    for p, r in ratios.items():
        ctx.check(f"kato_ratio_p{p:g}", r, 1 + slack, "<=")
        rows.append(("kato", p, r))
    F = build_symbol(ctx.cfg.get("symbol"), grid.d)
    lhs, rhs, ratio = convolution_bound_check(phi, F, A, 2.0, grid, zl)
    ctx.check("convolution_ratio_p2", ratio, 1 + slack, "<=")
    rows.append(("convolution", 2.0, ratio))
    ctx.write_csv("kato_ratios.csv", ["bound", "p", "ratio"], rows)


def _run_kato_conv(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    zl = build_zlattice(ctx.cfg, grid)
    f = build_symbol(ctx.cfg.get("weight"), grid.d)
    g = build_symbol(ctx.cfg.get("symbol"), grid.d)
    lhs = kato_convolution_expand(f, g, A, zl, grid, max_nodes=ctx.max_nodes).matrix
    rhs = op_matrix(discrete_convolution(f, g, zl, grid), A, grid).matrix
    rel = float(np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(rhs, 2))
    ctx.check("convolution_residual", rel, 1e-3)
    ctx.write_csv("kato_conv.csv", ["quantity", "value"], [("relative_residual", rel)])


def _run_bessel(ctx: _Ctx, grid: PhaseGrid) -> None:
    f = sample(build_symbol(ctx.cfg.get("symbol"), grid.d), grid, PLAIN)
    rows = []
    for s, t in ctx.opt("factorization", [[4, 4]]):
        res = reconstruct_check(f, s, t)
        ctx.check(f"factorization_s{s:g}_t{t:g}", res, 1e-9)
        rows.append(("gaussian", s, t, res))
    shape = grid.field_shape(PLAIN)
    rnd = SymbolField(grid, ctx.rng.normal(size=shape) + 1j * ctx.rng.normal(size=shape), PLAIN)
    res = reconstruct_check(rnd, 2, 3)
    ctx.check("factorization_random_s2_t3", res, 1e-10)
    rows.append(("random", 2, 3, res))
    ctx.write_csv("factorization.csv", ["field", "s", "t", "residual"], rows)

    cf = ctx.opt("closed_form", {"n": 131072, "L": 40.0})
    psi = bessel_kernel(2, make_grid(1, cf["n"], cf["L"]))
    closed = float(np.abs(psi.values - 0.5 * np.exp(-np.abs(psi.coords[0]))).max())
    ctx.check("psi2_closed_form", closed, 1e-4)
    ctx.artifacts.append(write_profile_csv(psi, ctx.out / "psi_profile_d1_s2.csv"))

    slope_rows = []
    for spec in ctx.opt("slopes", []):
        kg = make_grid(spec["d"], spec["n"], spec["L"])
        k = bessel_kernel(spec["s"], kg)
        fit = near_origin_slope(k, spec["r_min"], spec.get("r_max"))
        label = f"d{spec['d']}_s{spec['s']:g}"
        if fit.status == "fitted":
            ctx.check(f"slope_{label}", abs(fit.slope - fit.expected), 0.1)
        slope_rows.append((label, fit.slope, fit.expected if fit.expected is not None else "", fit.status))
        ctx.artifacts.append(write_profile_csv(k, ctx.out / f"psi_profile_{label}.csv"))
    if slope_rows:
        ctx.write_csv("slopes.csv", ["kernel", "slope", "expected", "status"], slope_rows)


def _run_theorem(ctx: _Ctx, grid: PhaseGrid) -> None:
    A = build_potential(ctx.cfg, grid.d)
    lambdas = ctx.opt("lambdas", [0.5, 1.0, 2.0, 4.0])
    family = [dilated_gaussian(grid.d, lam) for lam in lambdas]
    ps = [_p(p) for p in ctx.cfg.get("p_list", [1, 2, "inf"])]
    report = theorem_bound_report(family, A, ps, grid)
    report.runtimes = {}
    paths = report.write(ctx.out)
    ctx.artifacts.extend(paths)
    ceiling = ctx.tol("family_ceiling", 1.0)
    for p, c in report.family_constants().items():
        ctx.check(f"family_constant_p{p:g}", c, ceiling, "<=")
    ctx.check("ratios_finite", 0.0 if report.all_finite() else 1.0, 0.5)
    if 2.0 in ps:
        worst = 0.0
        for F, row in zip(family, [r for r in report.rows if r.p == 2.0]):
            _, rhs, _ = hs_identity_check(F, A, grid)
            worst = max(worst, abs(row.schatten - rhs) / rhs)
        ctx.check("p2_hs_consistency", worst, 1e-5)
    ctx.metrics["family_constants"] = {str(k): v for k, v in report.family_constants().items()}
    ctx.metrics["compactness_index"] = report.compactness


def _run_gauge(ctx: _Ctx, grid: PhaseGrid) -> None:
    F = build_symbol(ctx.cfg.get("symbol"), grid.d)
    b = ctx.cfg.get("field", {}).get("b", 1.0)
    A = symmetric_gauge(b)
    s1 = singular_values(op_matrix(F, A, grid))
    s2 = singular_values(op_matrix(F, landau_gauge(b), grid))
    dev = float(np.abs(s1 - s2).max() / s1[0])
    ctx.check("symmetric_vs_landau", dev, 1e-10)
    phi = quadratic_gauge([[0.0, -0.5 * b], [-0.5 * b, 0.0]])
    ctx.check("explicit_conjugation", gauge_conjugation_residual(F, A, phi, grid), 1e-8)
    H = ctx.rng.normal(size=(2, 2))
    rnd = quadratic_gauge(H, ctx.rng.normal(size=2), float(ctx.rng.normal()))
    ctx.check("random_quadratic_gauge", gauge_invariance_check(F, A, rnd, grid), 1e-9)
    ctx.write_csv("singular_values.csv", ["member", "index", "singular_value"],
                  [("symmetric", i, float(v)) for i, v in enumerate(s1)]
                  + [("landau", i, float(v)) for i, v in enumerate(s2)])


RUNNERS: dict[str, Callable[[_Ctx, PhaseGrid], None]] = {
    "flux-check": _run_flux,
    "quantize": _run_quantize,
    "hs-identity": _run_hs,
    "moyal-check": _run_moyal,
    "translate-check": _run_translate,
    "kato-check": _run_kato,
    "bessel": _run_bessel,
    "theorem-bounds": _run_theorem,
    "gauge-check": _run_gauge,
    "kato-conv": _run_kato_conv,
}

_NEEDS_SVD = {"quantize", "hs-identity", "theorem-bounds", "gauge-check", "kato-check"}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o)}")


def run_experiment(cfg: dict, out_dir: str | Path | None = None,
                   max_nodes: float = DEFAULT_NODE_BUDGET) -> RunManifest:
    """Validate ``cfg``, run its check and write report, CSVs and manifest."""
    validate_config(cfg)
    grid = build_grid(cfg)
    kind = cfg["kind"]
    if kind in _NEEDS_SVD and grid.size > SVD_SIZE_LIMIT:
        raise SizeLimitError(f"grid of size {grid.size} exceeds the dense SVD ceiling {SVD_SIZE_LIMIT}")
    name = cfg.get("name", kind)
    out = Path(out_dir or cfg.get("output_dir") or Path("runs") / name)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Ctx(cfg, out, max_nodes)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    error = None
    try:
        RUNNERS[kind](ctx, grid)
    except (SizeLimitError, ConfigError):
        raise
    except Exception as exc:  # numerical failures become failed checks
        error = f"{type(exc).__name__}: {exc}"
    runtime = time.perf_counter() - t0
    report = {"kind": kind, "name": name, "config_hash": config_hash(cfg), "seed": cfg.get("seed", 0),
              "grid": cfg["grid"], "checks": [asdict(c) for c in ctx.checks],
              "metrics": ctx.metrics, "error": error}
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    manifest = RunManifest(kind, name, config_hash(cfg), __version__, cfg.get("seed", 0), started,
                           datetime.now(timezone.utc).isoformat(), runtime, ctx.checks,
                           [str(report_path)] + [str(p) for p in ctx.artifacts], str(out), error)
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True,
                                                  default=_json_default))
    return manifest


# --------------------------------------------------------------------------
# plots

def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plots(manifest: RunManifest) -> list[Path]:
    """SVG plots for the singular-value and kernel-profile CSVs of a run."""
    sv_files = [Path(a) for a in manifest.artifacts if Path(a).name == "singular_values.csv"]
    prof_files = sorted(Path(a) for a in manifest.artifacts if Path(a).name.startswith("psi_profile_"))
    if not sv_files and not prof_files:
        return []
    for p in sv_files + prof_files:
        if not p.exists():
            raise FileNotFoundError(f"missing plot input {p}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = []
    with matplotlib.rc_context({"svg.hashsalt": "magweyl", "path.simplify": False}):
        if sv_files:
            fig, ax = plt.subplots(figsize=(6, 4))
            series: dict[str, list[float]] = {}
            for row in _read_csv(sv_files[0]):
                series.setdefault(row["member"], []).append(float(row["singular_value"]))
            for name, vals in series.items():
                v = np.asarray(vals)
                ax.semilogy(np.arange(len(v)), np.maximum(v, 1e-300), label=name)
            ax.set_xlabel("index n")
            ax.set_ylabel("singular value")
            ax.legend(fontsize="small")
            path = Path(manifest.out_dir) / "decay.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            out.append(path)
        if prof_files:
            fig, ax = plt.subplots(figsize=(6, 4))
            for p in prof_files:
                rows = _read_csv(p)
                r = np.array([float(x["r"]) for x in rows])
                v = np.array([float(x["psi"]) for x in rows])
                keep = (r > 0) & (v > 0)
                ax.loglog(r[keep], v[keep], label=p.stem.replace("psi_profile_", ""))
            ax.set_xlabel("r")
            ax.set_ylabel("psi_s(r)")
            ax.legend(fontsize="small")
            path = Path(manifest.out_dir) / "psi_profiles.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            out.append(path)
    return out
