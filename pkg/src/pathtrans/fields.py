"""Coefficient fields, scalar fields, frame changes, and the preset catalog.

A CoefficientField holds one k x k matrix of expressions per base direction;
its pullback along a path gives the transport generator
Gamma(s) = sum_mu Gamma_mu(gamma(s)) * dgamma^mu/ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr
from .errors import SingularityError, ValidationError
from .geometry import ChartedSpace, PathCurve, default_chart

Num, Var, Neg, BinOp, Pow, Call = expr.Num, expr.Var, expr.Neg, expr.BinOp, expr.Pow, expr.Call


@dataclass(frozen=True)
class CoefficientField:
    """Per-direction k x k expression matrices Gamma_mu(x) on a chart.

    ``regularity_guard`` (optional) is an expression whose magnitude must stay
    at or above ``guard_tol`` wherever the field is evaluated; violating it
    raises SingularityError instead of returning huge values.
    """

    space: ChartedSpace
    fibre_dim: int
    components: tuple[tuple[tuple[expr.Expression, ...], ...], ...]  # [mu][i][j]
    regularity_guard: expr.Expression | None = None
    guard_tol: float = 1e-12
    label: str = ""

    def __post_init__(self):
        if self.fibre_dim < 1:
            raise ValidationError("fibre_dim must be >= 1", "field.fibre_dim")
        if len(self.components) != self.space.dim:
            raise ValidationError("need one matrix per base direction", "field.components")
        for mat in self.components:
            if len(mat) != self.fibre_dim or any(len(row) != self.fibre_dim for row in mat):
                raise ValidationError("component matrices must be k x k", "field.components")
        allowed = set(self.space.coord_names)
        for mat in self.components:
            for row in mat:
                for entry in row:
                    extra = expr.free_variables(entry) - allowed
                    if extra:
                        raise ValidationError(
                            f"field expressions may only use chart coordinates; found {sorted(extra)}",
                            "field.components")

    def component(self, mu: int, i: int, j: int) -> expr.Expression:
        return self.components[mu][i][j]

    def _bindings(self, points: np.ndarray) -> dict:
        return {name: np.ascontiguousarray(points[:, a], dtype=np.complex128)
                for a, name in enumerate(self.space.coord_names)}

    def check_regular(self, points: np.ndarray) -> None:
        if self.regularity_guard is None:
            return
        vals = expr.evaluate(self.regularity_guard, self._bindings(points))
        vals = np.broadcast_to(np.atleast_1d(vals), (points.shape[0],))
        bad = np.abs(vals) < self.guard_tol
        if np.any(bad):
            where = points[int(np.argmax(bad))]
            raise SingularityError(
                f"field {self.label or 'expression field'} is singular near {tuple(where)}",
                location=str(tuple(float(c) for c in where)))

    def matrices_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate all Gamma_mu at the given points; shape (m, dim, k, k)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.check_regular(points)
        m = points.shape[0]
        k, dim = self.fibre_dim, self.space.dim
        bindings = self._bindings(points)
        out = np.zeros((m, dim, k, k), dtype=np.complex128)
        for mu in range(dim):
            for i in range(k):
                for j in range(k):
                    v = expr.evaluate(self.components[mu][i][j], bindings)
                    out[:, mu, i, j] = v
        return out


@dataclass(frozen=True)
class ScalarFieldFn:
    """A scalar expression in the chart coordinates."""

    space: ChartedSpace
    body: expr.Expression

    def __post_init__(self):
        extra = expr.free_variables(self.body) - set(self.space.coord_names)
        if extra:
            raise ValidationError(
                f"scalar field may only use chart coordinates; found {sorted(extra)}", "scalar.body")

    @classmethod
    def from_text(cls, space: ChartedSpace, text: str) -> "ScalarFieldFn":
        return cls(space, expr.parse(text))

    def values_at(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        bindings = {name: np.ascontiguousarray(points[:, a], dtype=np.complex128)
                    for a, name in enumerate(self.space.coord_names)}
        v = expr.evaluate(self.body, bindings)
        return np.broadcast_to(np.atleast_1d(v), (points.shape[0],)).astype(np.complex128)

    def value_at(self, point) -> complex:
        return complex(self.values_at(np.atleast_2d(np.asarray(point, dtype=float)))[0])

    def partial(self, axis: int) -> expr.Expression:
        return expr.differentiate(self.body, self.space.coord_names[axis])


@dataclass(frozen=True)
class GaugeChange:
    """A frame change: bundle-scalar a(x), bundle matrix A(x), or path-wise A(s).

    Exactly one variant is set.  ``base_change`` optionally carries a
    dim x dim matrix B of expressions for simultaneous base-frame changes.
    Invertibility (a != 0, det A != 0, det B != 0) is checked lazily at the
    evaluated points/parameters.
    """

    scalar: ScalarFieldFn | None = None
    bundle_matrix: tuple[tuple[expr.Expression, ...], ...] | None = None
    path_matrix: tuple[tuple[expr.Expression, ...], ...] | None = None
    base_change: tuple[tuple[expr.Expression, ...], ...] | None = None
    param: str = "s"

    def __post_init__(self):
        variants = sum(x is not None for x in (self.scalar, self.bundle_matrix, self.path_matrix))
        if variants != 1:
            raise ValidationError("exactly one gauge-change variant must be given", "change")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_scalar(cls, a: ScalarFieldFn, base_change=None) -> "GaugeChange":
        return cls(scalar=a, base_change=_coerce_matrix(base_change))

    @classmethod
    def from_bundle_matrix(cls, entries, base_change=None) -> "GaugeChange":
        return cls(bundle_matrix=_coerce_matrix(entries), base_change=_coerce_matrix(base_change))

    @classmethod
    def from_path_matrix(cls, entries, param: str = "s") -> "GaugeChange":
        return cls(path_matrix=_coerce_matrix(entries), param=param)

    # -- path-wise evaluation ------------------------------------------------

    def path_matrix_at(self, s_values) -> np.ndarray:
        """Evaluate the path-wise matrix A(s); shape (m, k, k)."""
        if self.path_matrix is None:
            raise ValidationError("gauge change has no path-wise matrix", "change")
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        k = len(self.path_matrix)
        out = np.zeros((s.shape[0], k, k), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                v = expr.evaluate(self.path_matrix[i][j], {self.param: s})
                out[:, i, j] = v
        dets = np.linalg.det(out)
        if np.any(dets == 0):
            raise SingularityError("path-wise frame change is singular")
        return out

    def path_matrix_derivative_at(self, s_values) -> np.ndarray:
        if self.path_matrix is None:
            raise ValidationError("gauge change has no path-wise matrix", "change")
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        k = len(self.path_matrix)
        out = np.zeros((s.shape[0], k, k), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                d = expr.differentiate(self.path_matrix[i][j], self.param)
                out[:, i, j] = expr.evaluate(d, {self.param: s})
        return out


def _coerce_matrix(entries):
    if entries is None:
        return None
    rows = []
    for row in entries:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(expr.parse(cell))
            elif isinstance(cell, (int, float, complex)):
                cells.append(Num(complex(cell)))
            else:
                cells.append(cell)
        rows.append(tuple(cells))
    mat = tuple(rows)
    if any(len(r) != len(mat) for r in mat):
        raise ValidationError("frame-change matrix must be square", "change")
    return mat


# --------------------------------------------------------------------------
# Pullback  Gamma(s) = Gamma_mu(gamma(s)) gammadot^mu(s)
# --------------------------------------------------------------------------

def pullback_many(field: CoefficientField, path: PathCurve, s_values) -> np.ndarray:
    """Transport generator along the path at many parameters; shape (m, k, k)."""
    if path.space is not field.space and path.space != field.space:
        raise ValidationError("path and field live on different charts", "path")
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    pts = path.points_at(s)
    mats = field.matrices_at(pts)                    # (m, dim, k, k)
    tans = path.tangents_at(s)                       # (m, dim)
    return np.einsum("md,mdij->mij", tans.astype(np.complex128), mats)


def pullback(field: CoefficientField, path: PathCurve, s: float) -> np.ndarray:
    """Gamma(s; gamma) as a k x k complex matrix."""
    return pullback_many(field, path, [s])[0]


def pullback_sampler(field: CoefficientField, path: PathCurve):
    """Vectorized sampler s -> (m, k, k) used by the transport integrators."""
    def sampler(s_values):
        return pullback_many(field, path, s_values)
    sampler.fibre_dim = field.fibre_dim
    return sampler


# --------------------------------------------------------------------------
# Preset catalog
# --------------------------------------------------------------------------

def _zero_matrix(k: int):
    return tuple(tuple(expr.ZERO for _ in range(k)) for _ in range(k))


def _scalar_components(space: ChartedSpace, entries) -> tuple:
    return tuple(((e,),) for e in entries)


def _require(params: dict, key: str, kind, name: str):
    if key not in params:
        raise ValidationError(f"catalog preset {name!r} needs parameter {key!r}", f"field.params.{key}")
    try:
        if kind is float:
            return float(params[key])
        if kind is str:
            return str(params[key])
        if kind is list:
            return [float(x) for x in params[key]]
    except (TypeError, ValueError):
        pass
    raise ValidationError(f"parameter {key!r} of preset {name!r} is invalid", f"field.params.{key}")


def _build_zero(space, params):
    k = int(params.get("k", 1))
    return CoefficientField(space, k, tuple(_zero_matrix(k) for _ in range(space.dim)), label="zero")


def _build_constant(space, params):
    c = _require(params, "c", float, "constant")
    comps = [((Num(complex(c)),),)] + [((expr.ZERO,),)] * (space.dim - 1)
    return CoefficientField(space, 1, tuple(comps), label="constant")


def _build_pure_gauge(space, params):
    text = _require(params, "f0", str, "pure_gauge")
    f0 = ScalarFieldFn.from_text(space, text)
    comps = tuple(((f0.partial(mu),),) for mu in range(space.dim))
    return CoefficientField(space, 1, comps, label="pure_gauge")


def _build_uniform_b(space, params):
    b = _require(params, "B", float, "uniform_B")
    x1, x2 = Var(space.coord_names[1]), Var(space.coord_names[2])
    a1 = expr.simplify(Neg(BinOp("*", Num(complex(b / 2.0)), x2)))
    a2 = expr.simplify(BinOp("*", Num(complex(b / 2.0)), x1))
    entries = [expr.ZERO, a1, a2, expr.ZERO][: space.dim]
    return CoefficientField(space, 1, _scalar_components(space, entries), label="uniform_B")


def _build_ab_flux(space, params):
    phi = _require(params, "phi", float, "ab_flux")
    x1, x2 = Var(space.coord_names[1]), Var(space.coord_names[2])
    rho2 = BinOp("+", Pow(x1, 2), Pow(x2, 2))
    c = Num(complex(phi / (2.0 * math.pi)))
    a1 = expr.simplify(Neg(BinOp("/", BinOp("*", c, x2), rho2)))
    a2 = expr.simplify(BinOp("/", BinOp("*", c, x1), rho2))
    entries = [expr.ZERO, a1, a2, expr.ZERO][: space.dim]
    return CoefficientField(space, 1, _scalar_components(space, entries),
                            regularity_guard=rho2, label="ab_flux")


def _build_plane_wave(space, params):
    eps = _require(params, "eps", list, "plane_wave")
    kvec = _require(params, "k", list, "plane_wave")
    if len(eps) != space.dim or len(kvec) != space.dim:
        raise ValidationError("plane_wave eps and k must match the chart dimension", "field.params")
    phase: expr.Expression = expr.ZERO
    for kv, name in zip(kvec, space.coord_names):
        phase = BinOp("+", phase, BinOp("*", Num(complex(kv)), Var(name)))
    phase = expr.simplify(phase)
    entries = [expr.simplify(BinOp("*", Num(complex(e)), Call("cos", (phase,)))) for e in eps]
    return CoefficientField(space, 1, _scalar_components(space, entries), label="plane_wave")


def _build_slice_demo(space, params):
    entries = [expr.ZERO, expr.ZERO, expr.ZERO, Var(space.coord_names[1])][: space.dim]
    return CoefficientField(space, 1, _scalar_components(space, entries), label="slice_demo")


def _build_rotation2d(space, params):
    w = _require(params, "omega", float, "rotation2d")
    g0 = ((expr.ZERO, Num(complex(-w))), (Num(complex(w)), expr.ZERO))
    comps = [g0] + [_zero_matrix(2) for _ in range(space.dim - 1)]
    return CoefficientField(space, 2, tuple(comps), label="rotation2d")


CATALOG = {
    "ab_flux": (["phi"], "vortex potential of a flux line along the x1=x2=0 axis (flat off-axis)", _build_ab_flux),
    "constant": (["c"], "k=1 field with Gamma_0 = c, all other directions zero", _build_constant),
    "plane_wave": (["eps", "k"], "A_mu = eps_mu * cos(k.x) with a linear phase k.x", _build_plane_wave),
    "pure_gauge": (["f0"], "gradient field A_mu = d f0 / dx^mu of a scalar potential", _build_pure_gauge),
    "rotation2d": (["omega"], "k=2 constant rotation generator in the x0 direction", _build_rotation2d),
    "slice_demo": ([], "A = (0, 0, 0, x1): flat on x3-frozen slices, curved globally", _build_slice_demo),
    "uniform_B": (["B"], "symmetric-gauge potential of a uniform field B in the x1-x2 plane", _build_uniform_b),
    "zero": ([], "identically zero coefficients (optionally k via param 'k')", _build_zero),
}


def catalog(name: str, params: dict | None = None, space: ChartedSpace | None = None) -> CoefficientField:
    """Build a named preset field on the default chart (or a compatible one)."""
    if name not in CATALOG:
        raise ValidationError(f"unknown catalog preset {name!r}", "field.catalog")
    space = space or default_chart()
    if space.dim < 4 and name in {"uniform_B", "ab_flux", "slice_demo"}:
        raise ValidationError(f"catalog preset {name!r} needs a 4-dim chart", "field.catalog")
    return CATALOG[name][2](space, params or {})
