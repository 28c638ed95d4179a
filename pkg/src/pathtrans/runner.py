"""Scenario runner: validate a JSON config, execute one named computation,
and emit a deterministic JSON report.

Reports are byte-reproducible: keys are sorted, numbers are serialized with
17 significant digits, and no timestamps or environment data appear in the
body.  Complex results are rendered as [re, im] pairs, matrices as row-major
arrays of such pairs.
"""

from __future__ import annotations

import json

import numpy as np

from . import em, line_bundle, transport
from .curvature import (DEFAULT_FLAT_TOL, DEFAULT_SAMPLES_PER_AXIS, RegionSpec, curvature_at,
                        is_flat, is_flat_on_slice)
from .errors import GateFailure, PathtransError, SingularityError, ValidationError
from .fields import CATALOG, CoefficientField, catalog
from .geometry import ChartedSpace, PathCurve, default_chart
from .transport import SCHEMES

SCENARIOS = ("transport", "curvature", "flatness", "slice_flatness", "holonomy",
             "normal_frame", "inertial_frame", "gauge_check", "ab_sweep", "stokes")

DEFAULT_NUMERIC = {"steps": 200, "scheme": "rk4", "tol": 1e-8,
                   "quad_nodes": 401, "surface_nodes": 101}

_TOP_LEVEL_KEYS = {"scenario", "chart", "field", "path", "loop", "region", "basepoint",
                   "point", "s", "t", "condition", "lambda", "phi", "coupling", "sweep",
                   "numeric", "output"}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_SINGULAR = 4

_EXIT_BY_KIND = {"config": EXIT_CONFIG, "gate": EXIT_GATE, "singularity": EXIT_SINGULAR}


# --------------------------------------------------------------------------
# Canonical JSON
# --------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("non-finite number in report")
    return format(float(x), ".17g")


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_canon(v)}" for k, v in sorted(obj.items()))
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_json(report: dict) -> str:
    return _canon(report) + "\n"


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _matrix_pairs(m: np.ndarray) -> list[list[float]]:
    return [_pair(z) for z in np.asarray(m).ravel()]


# --------------------------------------------------------------------------
# Config validation
# --------------------------------------------------------------------------

def _expect(cond: bool, message: str, location: str):
    if not cond:
        raise ValidationError(message, location)


def _get_number(block: dict, key: str, location: str, default=None, required=False) -> float:
    if key not in block:
        _expect(not required, f"missing required number {key!r}", f"{location}.{key}")
        return default
    v = block[key]
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            f"{key!r} must be a number", f"{location}.{key}")
    return float(v)


def _build_chart(cfg: dict) -> ChartedSpace:
    block = cfg.get("chart")
    if block is None:
        return default_chart()
    _expect(isinstance(block, dict), "chart must be an object", "chart")
    dim = int(_get_number(block, "dim", "chart", default=4))
    names = block.get("names", [f"x{i}" for i in range(dim)])
    metric = block.get("metric_diag", [1.0, -1.0, -1.0, -1.0] if dim == 4 else [1.0] * dim)
    extra = set(block) - {"dim", "names", "metric_diag"}
    _expect(not extra, f"unknown chart keys {sorted(extra)}", "chart")
    return ChartedSpace(dim, tuple(str(n) for n in names), tuple(float(g) for g in metric))


def _build_field(cfg: dict, space: ChartedSpace) -> CoefficientField:
    block = cfg.get("field")
    _expect(isinstance(block, dict), "a field block is required", "field")
    if "catalog" in block:
        extra = set(block) - {"catalog", "params"}
        _expect(not extra, f"unknown field keys {sorted(extra)}", "field")
        params = block.get("params", {})
        _expect(isinstance(params, dict), "field.params must be an object", "field.params")
        return catalog(str(block["catalog"]), params, space)
    if "expressions" in block:
        extra = set(block) - {"expressions", "fibre_dim", "guard"}
        _expect(not extra, f"unknown field keys {sorted(extra)}", "field")
        from . import expr as expr_mod
        raw = block["expressions"]
        _expect(isinstance(raw, list) and len(raw) == space.dim,
                f"expressions must list one entry per direction ({space.dim})", "field.expressions")
        k = int(_get_number(block, "fibre_dim", "field", default=1))
        mats = []
        for mu, entry in enumerate(raw):
            if isinstance(entry, str):
                _expect(k == 1, "string entries need fibre_dim 1", f"field.expressions[{mu}]")
                mats.append(((expr_mod.parse(entry),),))
            else:
                _expect(isinstance(entry, list) and len(entry) == k,
                        "matrix entries must be k x k string lists", f"field.expressions[{mu}]")
                mats.append(tuple(tuple(expr_mod.parse(str(c)) for c in row) for row in entry))
        guard = expr_mod.parse(str(block["guard"])) if "guard" in block else None
        return CoefficientField(space, k, tuple(mats), regularity_guard=guard, label="custom")
    raise ValidationError("field needs either 'catalog' or 'expressions'", "field")


def _build_path(cfg: dict, space: ChartedSpace, key: str) -> PathCurve:
    block = cfg.get(key)
    _expect(isinstance(block, dict), f"a {key} block is required", key)
    kind = block.get("kind", "expression")
    domain = block.get("domain")
    _expect(isinstance(domain, (list, tuple)) and len(domain) == 2,
            "domain must be [s_min, s_max]", f"{key}.domain")
    if kind == "expression":
        comps = block.get("components")
        _expect(isinstance(comps, list) and len(comps) == space.dim,
                f"components must list {space.dim} expressions", f"{key}.components")
        extra = set(block) - {"kind", "components", "domain", "param"}
        _expect(not extra, f"unknown {key} keys {sorted(extra)}", key)
        return PathCurve.from_expressions(space, [str(c) for c in comps],
                                          (float(domain[0]), float(domain[1])),
                                          param=str(block.get("param", "s")))
    if kind == "polyline":
        verts = block.get("vertices")
        _expect(isinstance(verts, list) and len(verts) >= 2,
                "polyline needs at least 2 vertices", f"{key}.vertices")
        extra = set(block) - {"kind", "vertices", "domain"}
        _expect(not extra, f"unknown {key} keys {sorted(extra)}", key)
        return PathCurve.polyline(space, [tuple(float(x) for x in v) for v in verts],
                                  (float(domain[0]), float(domain[1])))
    raise ValidationError(f"unknown path kind {kind!r}", f"{key}.kind")


def _build_region(cfg: dict, space: ChartedSpace, default_intervals=None) -> RegionSpec:
    block = cfg.get("region")
    if block is None and default_intervals is not None:
        return RegionSpec.box(default_intervals, [3] * space.dim)
    _expect(isinstance(block, dict), "a region block is required", "region")
    intervals = block.get("intervals")
    _expect(isinstance(intervals, list) and len(intervals) == space.dim,
            f"region needs {space.dim} intervals", "region.intervals")
    samples = block.get("samples", [DEFAULT_SAMPLES_PER_AXIS] * space.dim)
    frozen_raw = block.get("frozen", {})
    _expect(isinstance(frozen_raw, dict), "frozen must map axis -> value", "region.frozen")
    extra = set(block) - {"intervals", "samples", "frozen"}
    _expect(not extra, f"unknown region keys {sorted(extra)}", "region")
    frozen = {int(a): float(v) for a, v in frozen_raw.items()}
    return RegionSpec(tuple((float(lo), float(hi)) for lo, hi in intervals),
                      tuple(int(n) for n in samples),
                      tuple(frozen.items()))


def _build_numeric(cfg: dict) -> dict:
    block = cfg.get("numeric", {})
    _expect(isinstance(block, dict), "numeric must be an object", "numeric")
    extra = set(block) - set(DEFAULT_NUMERIC)
    _expect(not extra, f"unknown numeric keys {sorted(extra)}", "numeric")
    numeric = dict(DEFAULT_NUMERIC)
    numeric.update(block)
    numeric["steps"] = int(numeric["steps"])
    numeric["quad_nodes"] = int(numeric["quad_nodes"])
    numeric["surface_nodes"] = int(numeric["surface_nodes"])
    numeric["tol"] = float(numeric["tol"])
    _expect(numeric["steps"] >= 1, "steps must be >= 1", "numeric.steps")
    _expect(numeric["tol"] > 0, "tol must be positive", "numeric.tol")
    _expect(numeric["scheme"] in SCHEMES, f"scheme must be one of {SCHEMES}", "numeric.scheme")
    return numeric


def _build_coupling(cfg: dict) -> em.Coupling:
    block = cfg.get("coupling")
    if block is None:
        return em.Coupling()
    _expect(isinstance(block, dict), "coupling must be an object", "coupling")
    extra = set(block) - {"kind", "charge"}
    _expect(not extra, f"unknown coupling keys {sorted(extra)}", "coupling")
    return em.Coupling(str(block.get("kind", "paper-real")),
                       float(block.get("charge", 1.0)))


def _point_list(cfg: dict, key: str, space: ChartedSpace, default=None):
    if key not in cfg:
        return default
    v = cfg[key]
    _expect(isinstance(v, (list, tuple)) and len(v) == space.dim,
            f"{key} must list {space.dim} coordinates", key)
    return [float(x) for x in v]


# --------------------------------------------------------------------------
# Scenario handlers
# --------------------------------------------------------------------------

def _run_transport(cfg, space, numeric):
    field = _build_field(cfg, space)
    path = _build_path(cfg, space, "path")
    s = _get_number(cfg, "s", "config", required=True)
    t = _get_number(cfg, "t", "config", required=True)
    res = transport.integrate_transport(field, path, s, t,
                                        steps=numeric["steps"], scheme=numeric["scheme"])
    return {"k": field.fibre_dim, "matrix": _matrix_pairs(res.matrix),
            "s_from": res.s_from, "s_to": res.s_to,
            "est_error": res.est_error, "path_id": res.path_id}


def _run_curvature(cfg, space, numeric):
    field = _build_field(cfg, space)
    point = _point_list(cfg, "point", space)
    _expect(point is not None, "a point is required", "point")
    curv = curvature_at(field, point)
    comps = []
    for mu in range(space.dim):
        for nu in range(mu + 1, space.dim):
            comps.append({"mu": mu, "nu": nu,
                          "matrix": _matrix_pairs(curv.component(mu, nu))})
    return {"k": field.fibre_dim, "point": point, "components": comps}


def _flatness_result(report) -> dict:
    return {"flat": report.flat, "max_violation": report.max_violation,
            "argmax_point": list(report.argmax_point.coords),
            "argmax_pair": list(report.argmax_pair),
            "sample_count": report.sample_count}


def _run_flatness(cfg, space, numeric):
    field = _build_field(cfg, space)
    region = _build_region(cfg, space)
    return _flatness_result(is_flat(field, region, numeric["tol"]))


def _run_slice_flatness(cfg, space, numeric):
    field = _build_field(cfg, space)
    region = _build_region(cfg, space)
    return _flatness_result(is_flat_on_slice(field, region, numeric["tol"]))


def _run_holonomy(cfg, space, numeric):
    field = _build_field(cfg, space)
    loop = _build_path(cfg, space, "loop")
    if "coupling" in cfg:
        pot = em.Potential(field, _build_coupling(cfg))
        value, est = em.ab_phase_with_error(pot, loop, numeric["quad_nodes"])
    else:
        value, est = line_bundle.holonomy_with_error(field, loop, numeric["quad_nodes"])
    return {"value": _pair(value), "est_error": est}


def _normal_frame_result(res, extra: dict) -> dict:
    f0 = np.asarray(list(res.f0_samples.values()))
    out = {"residual": res.residual,
           "path_independence_defect": res.path_independence_defect,
           "basepoint": list(res.basepoint.coords),
           "lattice_points": len(res.f0_samples),
           "f0_at_basepoint": _pair(res.f0_at(res.basepoint)),
           "gauge_at_basepoint": _pair(res.gauge_at(res.basepoint)),
           "f0_re_range": [float(f0.real.min()), float(f0.real.max())],
           "f0_im_range": [float(f0.imag.min()), float(f0.imag.max())]}
    out.update(extra)
    return out


def _run_normal_frame(cfg, space, numeric):
    field = _build_field(cfg, space)
    region = _build_region(cfg, space)
    basepoint = _point_list(cfg, "basepoint", space, default=list(region.center()))
    res = line_bundle.solve_normal_frame(field, region, basepoint,
                                         tol=numeric["tol"], nodes=min(numeric["quad_nodes"], 129))
    return _normal_frame_result(res, {})


def _run_inertial_frame(cfg, space, numeric):
    field = _build_field(cfg, space)
    pot = em.Potential(field, _build_coupling(cfg))
    region = _build_region(cfg, space)
    basepoint = _point_list(cfg, "basepoint", space, default=list(region.center()))
    res = em.solve_inertial_frame(pot, region, basepoint,
                                  tol=numeric["tol"], nodes=min(numeric["quad_nodes"], 129))
    return _normal_frame_result(res.normal, {
        "lambda_at_basepoint": _pair(res.lambda_at(res.normal.basepoint)),
        "coupling": res.coupling.kind,
        "strong_normal_family": res.family})


def _run_gauge_check(cfg, space, numeric):
    field = _build_field(cfg, space)
    pot = em.Potential(field, _build_coupling(cfg))
    condition = cfg.get("condition")
    _expect(isinstance(condition, str), "a gauge condition is required", "condition")
    region = _build_region(cfg, space, default_intervals=[(-1.0, 1.0)] * space.dim)
    points = region.lattice()
    samples = []
    worst = 0.0
    for p in points:
        r = em.gauge_residual(pot, condition, p)
        worst = max(worst, abs(r))
        samples.append({"point": [float(c) for c in p], "residual": _pair(r)})
    out = {"condition": condition, "max_abs_residual": worst, "samples": samples}
    if "lambda" in cfg:
        from .fields import ScalarFieldFn
        lam = ScalarFieldFn.from_text(space, str(cfg["lambda"]))
        vals = [em.lambda_condition_residual(space, condition, lam, p) for p in points]
        out["lambda_max_abs_residual"] = max(abs(v) for v in vals)
        if "phi" in cfg:
            phi = ScalarFieldFn.from_text(space, str(cfg["phi"]))
            pvals = [em.phi_condition_residual(space, condition, lam, phi, p) for p in points]
            out["phi_max_abs_residual"] = max(abs(v) for v in pvals)
    return out


def _run_ab_sweep(cfg, space, numeric):
    sweep = cfg.get("sweep")
    _expect(isinstance(sweep, dict), "a sweep block is required", "sweep")
    extra = set(sweep) - {"kind", "param", "values"}
    _expect(not extra, f"unknown sweep keys {sorted(extra)}", "sweep")
    kind = sweep.get("kind")
    _expect(kind in ("flux", "radius"), "sweep.kind must be 'flux' or 'radius'", "sweep.kind")
    values = sweep.get("values")
    _expect(isinstance(values, list) and values, "sweep.values must be a nonempty list", "sweep.values")
    values = [float(v) for v in values]
    coupling = _build_coupling(cfg)
    rows = []
    if kind == "flux":
        block = cfg.get("field", {})
        _expect(isinstance(block, dict) and "catalog" in block,
                "flux sweeps need a catalog field", "field")
        param = str(sweep.get("param", "phi"))
        loop = _build_path(cfg, space, "loop")
        for v in values:
            params = dict(block.get("params", {}))
            params[param] = v
            field = catalog(str(block["catalog"]), params, space)
            value, est = em.ab_phase_with_error(em.Potential(field, coupling),
                                                loop, numeric["quad_nodes"])
            rows.append({"param": v, "value": _pair(value), "est_error": est})
    else:
        field = _build_field(cfg, space)
        _expect(space.dim == 4, "radius sweeps need a 4-dim chart", "chart")
        for v in values:
            _expect(v > 0, "radius values must be positive", "sweep.values")
            loop = PathCurve.from_expressions(
                space, ["0", f"{v!r}*cos(s)", f"{v!r}*sin(s)", "0"], (0.0, 2.0 * np.pi))
            value, est = em.ab_phase_with_error(em.Potential(field, coupling),
                                                loop, numeric["quad_nodes"])
            rows.append({"param": v, "value": _pair(value), "est_error": est})
    return {"kind": kind, "rows": rows}


def _run_stokes(cfg, space, numeric):
    field = _build_field(cfg, space)
    pot = em.Potential(field, _build_coupling(cfg))
    loop = _build_path(cfg, space, "loop")
    rep = em.stokes_check(pot, loop, loop_nodes=numeric["quad_nodes"],
                          surface_nodes=numeric["surface_nodes"])
    return {"loop_integral": _pair(rep.loop_integral),
            "flux_integral": _pair(rep.flux_integral),
            "defect": rep.defect, "plane": list(rep.plane)}


_HANDLERS = {
    "transport": _run_transport,
    "curvature": _run_curvature,
    "flatness": _run_flatness,
    "slice_flatness": _run_slice_flatness,
    "holonomy": _run_holonomy,
    "normal_frame": _run_normal_frame,
    "inertial_frame": _run_inertial_frame,
    "gauge_check": _run_gauge_check,
    "ab_sweep": _run_ab_sweep,
    "stokes": _run_stokes,
}


# --------------------------------------------------------------------------
# Entry points
# --------------------------------------------------------------------------

def run_scenario(config: dict) -> dict:
    """Validate and execute one scenario; returns the report dict (raises on error)."""
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object", "config")
    unknown = set(config) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}", "config")
    scenario = config.get("scenario")
    if scenario not in SCENARIOS:
        raise ValidationError(f"scenario must be one of {SCENARIOS}", "scenario")
    space = _build_chart(config)
    numeric = _build_numeric(config)
    results = _HANDLERS[scenario](config, space, numeric)
    return {"scenario": scenario, "config": config, "numeric": numeric,
            "results": results, "status": "ok"}


def execute(config: dict) -> tuple[dict, int]:
    """Run a scenario, mapping failures to error reports and exit codes."""
    try:
        return run_scenario(config), EXIT_OK
    except PathtransError as e:
        return {"error": e.as_dict()}, _EXIT_BY_KIND.get(e.kind, EXIT_CONFIG)


def csv_for_sweep(report: dict) -> str:
    """CSV rendering of an ab_sweep report: header param,re,im,est_error."""
    results = report.get("results", {})
    if "rows" not in results:
        raise ValidationError("CSV output is only available for ab_sweep reports", "output.csv")
    lines = ["param,re,im,est_error"]
    for row in results["rows"]:
        re_, im = row["value"]
        lines.append(",".join(_fmt_float(x) for x in (row["param"], re_, im, row["est_error"])))
    return "\n".join(lines) + "\n"


def list_catalog() -> str:
    """Stable, alphabetized listing of the preset fields."""
    lines = []
    for name in sorted(CATALOG):
        params, description, _ = CATALOG[name]
        args = ", ".join(params) if params else "-"
        lines.append(f"{name}  params: {args}  {description}")
    return "\n".join(lines) + "\n"
