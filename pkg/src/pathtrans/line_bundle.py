"""Scalar (k = 1) specialization: quadrature transports, holonomy, scalar
gauge changes, and the normal-frame solver.

For a line bundle the transport factor has the closed form

    L(t, s) = exp(-integral_s^t Gamma(sigma) dsigma),

so transports reduce to composite-Simpson quadrature of the pulled-back
coefficient 1-form, and a loop holonomy is exp(-circulation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import expr
from .curvature import RegionSpec, is_flat
from .errors import GateFailure, SingularityError, ValidationError
from .fields import CoefficientField, GaugeChange, ScalarFieldFn, pullback_many
from .geometry import PathCurve, Point, as_point_array

DEFAULT_QUAD_NODES = 401
LOOP_CLOSURE_TOL = 1e-12


def _require_line_bundle(field: CoefficientField) -> None:
    if field.fibre_dim != 1:
        raise ValidationError("this operation needs a line bundle (fibre dimension 1)", "field")


@dataclass(frozen=True)
class OneForm:
    """The coefficient 1-form omega = Gamma_mu dx^mu of a line-bundle field."""

    space: object
    components: tuple[expr.Expression, ...]

    @classmethod
    def from_field(cls, field: CoefficientField) -> "OneForm":
        _require_line_bundle(field)
        return cls(field.space, tuple(field.components[mu][0][0] for mu in range(field.space.dim)))


# --------------------------------------------------------------------------
# Composite Simpson quadrature of the pullback
# --------------------------------------------------------------------------

def _odd(n: int) -> int:
    return n if n % 2 == 1 else n + 1


def _simpson_weights(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(a, b, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (n - 1) / 3.0
    return x, w


def _pieces(path: PathCurve, lo: float, hi: float) -> list[tuple[float, float]]:
    """Smooth parameter pieces of [lo, hi] (split at polyline vertices)."""
    if path.kind != "polyline":
        return [(lo, hi)]
    nseg = len(path.vertices) - 1
    span = path.s_max - path.s_min
    breaks = [path.s_min + span * i / nseg for i in range(nseg + 1)]
    cuts = sorted({lo, hi} | {b for b in breaks if lo < b < hi})
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


def _scalar_integrand(field: CoefficientField, path: PathCurve,
                      x: np.ndarray, piece: tuple[float, float]) -> np.ndarray:
    pts = path.points_at(x)
    mats = field.matrices_at(pts)[:, :, 0, 0]  # (m, dim)
    if path.kind == "polyline":
        # tangent is constant inside a piece; sample it at the midpoint
        tan = path.tangent_at(0.5 * (piece[0] + piece[1]))
        return mats @ tan.astype(np.complex128)
    tans = path.tangents_at(x)
    return np.einsum("md,md->m", mats, tans.astype(np.complex128))


def line_integral(field: CoefficientField, path: PathCurve, s: float, t: float,
                  nodes: int = DEFAULT_QUAD_NODES) -> tuple[complex, complex]:
    """integral_s^t Gamma(sigma) dsigma with a step-halving estimate.

    Returns (fine value, coarse value); polylines are integrated piecewise so
    tangent kinks never cross a Simpson panel.
    """
    _require_line_bundle(field)
    path._check_params(np.asarray([s, t], dtype=float))
    if s == t:
        return 0j, 0j
    sign = 1.0
    lo, hi = s, t
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0
    pieces = _pieces(path, lo, hi)
    total_len = hi - lo
    fine = 0j
    coarse = 0j
    for piece in pieces:
        a, b = piece
        n = _odd(max(5, int(round(nodes * (b - a) / total_len))))
        x, w = _simpson_weights(a, b, n)
        vals = _scalar_integrand(field, path, x, piece)
        fine += complex(np.dot(w, vals))
        xc = x[::2]
        wc = np.ones(xc.shape[0])
        wc[1:-1:2] = 4.0
        wc[2:-1:2] = 2.0
        wc *= (b - a) / (xc.shape[0] - 1) / 3.0
        coarse += complex(np.dot(wc, vals[::2]))
    return sign * fine, sign * coarse


def scalar_transport_with_error(field: CoefficientField, path: PathCurve, s: float, t: float,
                                nodes: int = DEFAULT_QUAD_NODES) -> tuple[complex, float]:
    fine, coarse = line_integral(field, path, s, t, nodes)
    value = complex(np.exp(-fine))
    est = abs(value - complex(np.exp(-coarse)))
    return value, est


def scalar_transport(field: CoefficientField, path: PathCurve, s: float, t: float,
                     nodes: int = DEFAULT_QUAD_NODES) -> complex:
    """L(t, s) = exp(-integral_s^t Gamma) for a line-bundle field."""
    return scalar_transport_with_error(field, path, s, t, nodes)[0]


def holonomy_with_error(field: CoefficientField, loop: PathCurve,
                        nodes: int = DEFAULT_QUAD_NODES) -> tuple[complex, float]:
    ends = loop.points_at([loop.s_min, loop.s_max])
    if float(np.max(np.abs(ends[1] - ends[0]))) > LOOP_CLOSURE_TOL:
        raise ValidationError("holonomy needs a closed loop (endpoints must coincide)", "loop")
    return scalar_transport_with_error(field, loop, loop.s_min, loop.s_max, nodes)


def holonomy(field: CoefficientField, loop: PathCurve,
             nodes: int = DEFAULT_QUAD_NODES) -> complex:
    """Transport factor exp(-circulation of omega) around a closed loop."""
    return holonomy_with_error(field, loop, nodes)[0]


# --------------------------------------------------------------------------
# Scalar gauge change along a path
# --------------------------------------------------------------------------

@dataclass
class TransformedScalarTransport:
    """Transport and coefficient samplers after a frame change e -> a e."""

    transport: Callable[[float, float], complex]
    coefficient: Callable[[float], complex]


def gauge_change_scalar(field: CoefficientField, path: PathCurve, change: GaugeChange,
                        nodes: int = DEFAULT_QUAD_NODES) -> TransformedScalarTransport:
    """L'(t, s) = (a(s)/a(t)) L(t, s)  and  Gamma'(s) = Gamma(s) + d ln a / ds.

    ``change`` is either a bundle scalar a(x) (pulled back along the path) or
    a path-wise 1 x 1 matrix a(s).
    """
    _require_line_bundle(field)

    if change.scalar is not None:
        a_field = change.scalar

        def a_of(s: float) -> complex:
            return a_field.value_at(path.point_at(s))

        grads = [a_field.partial(mu) for mu in range(field.space.dim)]

        def dlog_of(s: float) -> complex:
            p = path.point_at(s)
            a_val = a_field.value_at(p)
            if a_val == 0:
                raise SingularityError(f"gauge scalar vanishes at s={s}")
            bindings = {name: complex(c) for name, c in zip(field.space.coord_names, p)}
            grad = np.array([expr.evaluate_scalar(g, bindings) for g in grads])
            return complex(grad @ path.tangent_at(s).astype(np.complex128)) / a_val
    elif change.path_matrix is not None:
        if len(change.path_matrix) != 1:
            raise ValidationError("scalar gauge change needs a 1 x 1 path matrix", "change")
        body = change.path_matrix[0][0]
        dbody = expr.differentiate(body, change.param)

        def a_of(s: float) -> complex:
            return expr.evaluate_scalar(body, {change.param: complex(s)})

        def dlog_of(s: float) -> complex:
            a_val = a_of(s)
            if a_val == 0:
                raise SingularityError(f"gauge scalar vanishes at s={s}")
            return expr.evaluate_scalar(dbody, {change.param: complex(s)}) / a_val
    else:
        raise ValidationError("scalar gauge change needs a scalar or 1 x 1 path matrix", "change")

    def transport(s: float, t: float) -> complex:
        a_s, a_t = a_of(s), a_of(t)
        if a_s == 0 or a_t == 0:
            raise SingularityError("gauge scalar vanishes at a transport endpoint")
        return (a_s / a_t) * scalar_transport(field, path, s, t, nodes)

    def coefficient(s: float) -> complex:
        return complex(pullback_many(field, path, [s])[0, 0, 0]) + dlog_of(s)

    return TransformedScalarTransport(transport, coefficient)


# --------------------------------------------------------------------------
# Normal frames on flat convex boxes
# --------------------------------------------------------------------------

def segment_integrals(field: CoefficientField, base: np.ndarray, targets: np.ndarray,
                      nodes: int = 129) -> np.ndarray:
    """Line integrals of omega along straight segments base -> target; shape (P,)."""
    _require_line_bundle(field)
    base = np.asarray(base, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = _odd(max(5, nodes))
    u, w = _simpson_weights(0.0, 1.0, n)
    d = targets - base[None, :]                                   # (P, dim)
    coords = base[None, None, :] + u[:, None, None] * d[None, :, :]
    p = targets.shape[0]
    flat = coords.reshape(n * p, -1)
    omega = field.matrices_at(flat)[:, :, 0, 0].reshape(n, p, -1)  # (n, P, dim)
    integrand = np.einsum("npd,pd->np", omega, d.astype(np.complex128))
    return np.einsum("n,np->p", w, integrand)


@dataclass
class NormalFrameResult:
    """Potential f0 with A_mu = d f0/dx^mu on the lattice, and the gauge a = exp(-f0).

    ``residual`` is max |A_mu - finite-difference gradient of f0| over the
    lattice; ``path_independence_defect`` is the worst |holonomy - 1| over a
    fixed set of rectangular probe loops inside the region.
    """

    basepoint: Point
    axis_values: list[np.ndarray]
    f0_grid: np.ndarray
    f0_samples: dict[tuple[float, ...], complex]
    residual: float
    path_independence_defect: float
    field: CoefficientField
    quad_nodes: int

    def f0_at(self, point) -> complex:
        p = as_point_array(point, self.field.space)
        return complex(segment_integrals(self.field, self.basepoint.as_array(),
                                         p[None, :], self.quad_nodes)[0])

    def gauge_at(self, point) -> complex:
        return complex(np.exp(-self.f0_at(point)))


def _probe_loop_defect(field: CoefficientField, region: RegionSpec, nodes: int) -> float:
    center = region.center()
    worst = 0.0
    axes = [a for a in range(region.dim)
            if region.intervals[a][1] > region.intervals[a][0]]
    for i, mu in enumerate(axes):
        for nu in axes[i + 1:]:
            du = 0.25 * (region.intervals[mu][1] - region.intervals[mu][0])
            dv = 0.25 * (region.intervals[nu][1] - region.intervals[nu][0])
            corners = []
            for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)):
                c = center.copy()
                c[mu] += su * du
                c[nu] += sv * dv
                corners.append(tuple(c))
            loop = PathCurve.polyline(field.space, corners, (0.0, 1.0))
            hol, _ = holonomy_with_error(field, loop, nodes)
            worst = max(worst, abs(hol - 1.0))
    return worst


def solve_normal_frame(field: CoefficientField, region: RegionSpec, basepoint,
                       tol: float = 1e-8, nodes: int = 129) -> NormalFrameResult:
    """Construct f0 with A_mu = d f0/dx^mu on a flat convex box.

    The flatness gate must pass first (GateFailure otherwise).  f0 is the line
    integral of omega from the basepoint along straight segments, which is
    path-independent on a flat convex region; the frame change a = exp(-f0)
    then drives the transformed potential to zero up to ``residual``.
    """
    _require_line_bundle(field)
    if region.frozen:
        raise ValidationError("normal-frame regions must be full boxes (no frozen axes)", "region")
    if region.dim != field.space.dim:
        raise ValidationError("region dimension does not match the chart", "region")
    for lo, hi in region.intervals:
        if hi <= lo:
            raise ValidationError("normal-frame regions need positive extent on every axis",
                                  "region.intervals")
    base = as_point_array(basepoint, field.space)
    if not region.contains(base):
        raise ValidationError("basepoint must lie inside the region", "basepoint")

    gate = is_flat(field, region, tol)
    if not gate.flat:
        raise GateFailure(
            f"region is not flat: max curvature violation {gate.max_violation:.3e} "
            f"at {gate.argmax_point.coords} (pair {gate.argmax_pair}); "
            "no frame normal on this region exists",
            location=str(gate.argmax_point.coords),
            max_violation=gate.max_violation)

    points = region.lattice()
    f0_flat = segment_integrals(field, base, points, nodes)
    shape = tuple(len(av) for av in region.axis_values())
    f0_grid = f0_flat.reshape(shape)

    axis_vals = region.axis_values()
    grads = []
    for a in range(region.dim):
        edge = 2 if shape[a] >= 3 else 1
        grads.append(np.gradient(f0_grid, axis_vals[a], axis=a, edge_order=edge))
    grad = np.stack([g.reshape(-1) for g in grads], axis=-1)      # (P, dim)

    a_vals = field.matrices_at(points)[:, :, 0, 0]                 # (P, dim)
    residual = float(np.max(np.abs(a_vals - grad)))

    defect = _probe_loop_defect(field, region, nodes)
    samples = {tuple(float(c) for c in pt): complex(v) for pt, v in zip(points, f0_flat)}
    return NormalFrameResult(Point(tuple(base)), axis_vals, f0_grid, samples,
                             residual, defect, field, nodes)
