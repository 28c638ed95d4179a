"""Charted base space, points, diagonal metrics, and parametrized paths.

Paths come in two kinds: expression-parametrized curves with exact symbolic
tangents, and polylines parametrized by normalized vertex index with
piecewise-linear interpolation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import ValidationError

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class ChartedSpace:
    """An n-dimensional chart with named coordinates and a constant diagonal metric."""

    dim: int
    coord_names: tuple[str, ...]
    metric_diag: tuple[float, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be >= 1", "chart.dim")
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        object.__setattr__(self, "metric_diag", tuple(float(g) for g in self.metric_diag))
        if len(self.coord_names) != self.dim:
            raise ValidationError("coord_names length must equal dim", "chart.names")
        if len(set(self.coord_names)) != self.dim:
            raise ValidationError("coordinate names must be pairwise distinct", "chart.names")
        if len(self.metric_diag) != self.dim:
            raise ValidationError("metric_diag length must equal dim", "chart.metric_diag")
        if any(g == 0 for g in self.metric_diag):
            raise ValidationError("metric_diag entries must be nonzero", "chart.metric_diag")

    @property
    def inverse_metric_diag(self) -> tuple[float, ...]:
        return tuple(1.0 / g for g in self.metric_diag)


def default_chart() -> ChartedSpace:
    """4-dim chart (x0, x1, x2, x3) with Minkowski metric diag(+1, -1, -1, -1)."""
    return ChartedSpace(4, ("x0", "x1", "x2", "x3"), (1.0, -1.0, -1.0, -1.0))


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if not all(np.isfinite(c) for c in self.coords):
            raise ValidationError("point coordinates must be finite", "point")

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


def as_point_array(p, space: ChartedSpace) -> np.ndarray:
    arr = p.as_array() if isinstance(p, Point) else np.asarray(p, dtype=float)
    if arr.shape != (space.dim,):
        raise ValidationError(f"point must have {space.dim} coordinates", "point")
    return arr


@dataclass(frozen=True)
class PathCurve:
    """A parametrized C1 path on a chart, with tangents.

    ``expression`` kind: one coordinate expression per chart axis in the path
    parameter (default name ``s``).  ``polyline`` kind: ordered vertices; the
    parameter interval maps linearly onto the vertex index range, tangents are
    the per-segment chord scaled by the parametrization speed.
    """

    space: ChartedSpace
    s_min: float
    s_max: float
    kind: str  # "expression" | "polyline"
    components: tuple[expr.Expression, ...] | None = None
    vertices: tuple[tuple[float, ...], ...] | None = None
    param: str = "s"
    name: str | None = None
    _tangent_exprs: tuple[expr.Expression, ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.s_min) and np.isfinite(self.s_max)) or self.s_min > self.s_max:
            raise ValidationError("path domain must be a nonempty closed interval", "path.domain")
        if self.kind == "expression":
            if self.components is None or len(self.components) != self.space.dim:
                raise ValidationError("expression path needs one component per coordinate", "path.components")
            tangents = tuple(expr.differentiate(c, self.param) for c in self.components)
            object.__setattr__(self, "_tangent_exprs", tangents)
        elif self.kind == "polyline":
            if self.vertices is None or len(self.vertices) < 2:
                raise ValidationError("polyline needs at least 2 vertices", "path.vertices")
            verts = tuple(tuple(float(x) for x in v) for v in self.vertices)
            if any(len(v) != self.space.dim for v in verts):
                raise ValidationError("polyline vertices must match the chart dimension", "path.vertices")
            object.__setattr__(self, "vertices", verts)
        else:
            raise ValidationError(f"unknown path kind {self.kind!r}", "path.kind")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_expressions(cls, space: ChartedSpace, components, domain,
                         param: str = "s", name: str | None = None) -> "PathCurve":
        comps = tuple(expr.parse(c) if isinstance(c, str) else c for c in components)
        for c in comps:
            extra = expr.free_variables(c) - {param}
            if extra:
                raise ValidationError(
                    f"path components may only use the parameter {param!r}; found {sorted(extra)}",
                    "path.components")
        return cls(space, float(domain[0]), float(domain[1]), "expression", components=comps,
                   param=param, name=name)

    @classmethod
    def polyline(cls, space: ChartedSpace, vertices, domain=(0.0, 1.0),
                 name: str | None = None) -> "PathCurve":
        return cls(space, float(domain[0]), float(domain[1]), "polyline",
                   vertices=tuple(tuple(v) for v in vertices), name=name)

    # -- identity ----------------------------------------------------------

    @property
    def path_id(self) -> str:
        if self.name:
            return self.name
        if self.kind == "expression":
            body = ",".join(expr.to_text(c) for c in self.components)
        else:
            body = ";".join(",".join(repr(x) for x in v) for v in self.vertices)
        key = f"{self.kind}|{self.param}|{self.s_min!r}|{self.s_max!r}|{body}"
        return hashlib.sha1(key.encode()).hexdigest()[:12]

    # -- evaluation ---------------------------------------------------------

    def _check_params(self, s: np.ndarray) -> None:
        lo, hi = self.s_min - _DOMAIN_SLACK, self.s_max + _DOMAIN_SLACK
        if np.any(s < lo) or np.any(s > hi):
            raise ValidationError(
                f"parameter outside path domain [{self.s_min}, {self.s_max}]", "path.parameter")

    def points_at(self, s_values) -> np.ndarray:
        """Positions gamma(s) for an array of parameters; shape (m, dim)."""
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        self._check_params(s)
        if self.kind == "expression":
            cols = []
            for c in self.components:
                v = expr.evaluate(c, {self.param: s})
                v = np.broadcast_to(np.asarray(v), s.shape)
                if np.any(np.abs(v.imag) > 1e-12):
                    raise ValidationError("path components must be real-valued", "path.components")
                cols.append(v.real)
            return np.stack(cols, axis=-1)
        verts = np.asarray(self.vertices, dtype=float)
        nseg = len(verts) - 1
        span = self.s_max - self.s_min
        u = np.zeros_like(s) if span == 0 else (s - self.s_min) / span
        pos = np.clip(u * nseg, 0.0, nseg)
        idx = np.minimum(pos.astype(int), nseg - 1)
        w = pos - idx
        return verts[idx] + w[:, None] * (verts[idx + 1] - verts[idx])

    def point_at(self, s: float) -> np.ndarray:
        return self.points_at([s])[0]

    def tangents_at(self, s_values) -> np.ndarray:
        """Tangent vectors (d gamma / ds) at the given parameters; shape (m, dim)."""
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        self._check_params(s)
        if self.kind == "expression":
            cols = []
            for d in self._tangent_exprs:
                v = expr.evaluate(d, {self.param: s})
                v = np.broadcast_to(np.asarray(v), s.shape)
                cols.append(v.real)
            return np.stack(cols, axis=-1)
        verts = np.asarray(self.vertices, dtype=float)
        nseg = len(verts) - 1
        span = self.s_max - self.s_min
        if span == 0:
            raise ValidationError("degenerate parameter interval has no tangent", "path.domain")
        u = (s - self.s_min) / span
        pos = np.clip(u * nseg, 0.0, nseg)
        # interior vertices take the right segment; s_max takes the left one
        idx = np.minimum(pos.astype(int), nseg - 1)
        seg = verts[idx + 1] - verts[idx]
        if np.any(np.all(seg == 0.0, axis=-1)):
            raise ValidationError("polyline has a zero-length segment", "path.vertices")
        return seg * (nseg / span)

    def tangent_at(self, s: float) -> np.ndarray:
        return self.tangents_at([s])[0]


# --------------------------------------------------------------------------
# Module-level operations
# --------------------------------------------------------------------------

def eval_path(path: PathCurve, s: float) -> Point:
    """gamma(s) as a Point."""
    return Point(tuple(path.point_at(s)))


def tangent(path: PathCurve, s: float) -> np.ndarray:
    """Tangent vector of the path at parameter s."""
    return path.tangent_at(s)


def raise_index(space: ChartedSpace, covector) -> list[float]:
    """Raise a covector index with the inverse diagonal metric (v^mu = v_mu / g_mumu)."""
    cov = list(covector)
    if len(cov) != space.dim:
        raise ValidationError(f"covector must have {space.dim} components", "covector")
    return [c / g for c, g in zip(cov, space.metric_diag)]
