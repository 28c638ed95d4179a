"""Electromagnetic layer over the line-bundle machinery.

A Potential wraps a k = 1 coefficient field on a 4-dim chart, read as the
4-potential A_mu.  The field tensor F_munu = -dA_mu/dx^nu + dA_nu/dx^mu is
the k = 1 curvature, the gauge conditions of the usual catalog (Lorenz,
Coulomb, Hamilton, axial) become pointwise residuals, inertial frames are
normal frames for the associated transport, and loop transports realize
Aharonov-Bohm phases.

Two couplings are exposed: the faithful real identification Gamma_mu = A_mu
(loop factors are real attenuations exp(-flux)), and an opt-in U(1) coupling
Gamma_mu = i q A_mu whose loop factors are unit-modulus phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr
from .curvature import RegionSpec, curvature_at, is_flat
from .errors import GateFailure, SingularityError, ValidationError
from .fields import CoefficientField, ScalarFieldFn
from .geometry import PathCurve, Point, as_point_array
from .line_bundle import (DEFAULT_QUAD_NODES, NormalFrameResult, _odd, _pieces,
                          _simpson_weights, holonomy_with_error, line_integral,
                          solve_normal_frame)

GAUGE_CONDITIONS = ("lorenz", "coulomb", "hamilton", "axial")


@dataclass(frozen=True)
class Coupling:
    kind: str = "paper-real"  # "paper-real" | "u1"
    charge: float = 1.0

    def __post_init__(self):
        if self.kind not in ("paper-real", "u1"):
            raise ValidationError(f"unknown coupling {self.kind!r}", "coupling.kind")
        if self.kind == "u1" and self.charge == 0:
            raise ValidationError("u1 coupling needs a nonzero charge", "coupling.charge")


@dataclass(frozen=True)
class Potential:
    """A 4-potential: k = 1 coefficient field on a 4-dim chart, plus a coupling."""

    field: CoefficientField
    coupling: Coupling = Coupling()

    def __post_init__(self):
        if self.field.fibre_dim != 1:
            raise ValidationError("a potential needs fibre dimension 1", "field")
        if self.field.space.dim != 4:
            raise ValidationError("a potential needs a 4-dim chart", "field")

    def component(self, mu: int) -> expr.Expression:
        return self.field.components[mu][0][0]

    def transported_field(self) -> CoefficientField:
        """Coefficient field actually transported: A itself, or i q A for u1."""
        if self.coupling.kind == "paper-real":
            return self.field
        factor = expr.Num(1j * complex(self.coupling.charge))
        comps = tuple(((expr.simplify(expr.BinOp("*", factor, self.component(mu))),),)
                      for mu in range(4))
        return CoefficientField(self.field.space, 1, comps,
                                regularity_guard=self.field.regularity_guard,
                                guard_tol=self.field.guard_tol,
                                label=f"i*q*{self.field.label or 'A'}")


@dataclass
class FieldTensorAtPoint:
    point: Point
    components: np.ndarray  # (4, 4), antisymmetric

    def component(self, mu: int, nu: int) -> complex:
        return complex(self.components[mu, nu])


def field_tensor(a: Potential, p) -> FieldTensorAtPoint:
    """F_munu at a point; identical to the k = 1 curvature pipeline."""
    curv = curvature_at(a.field, p)
    return FieldTensorAtPoint(curv.point, curv.components[:, :, 0, 0])


def gauge_transform(a: Potential, lam: ScalarFieldFn, base_change=None) -> Potential:
    """A'_mu = B_mu^nu (A_nu + d lambda/dx^nu); with B absent, a pure gauge shift.

    Equivalent to the 3-index transformation with the frame scalar exp(lambda),
    but built directly so the shifted components stay compact.
    """
    space = a.field.space
    if lam.space != space:
        raise ValidationError("gauge function must live on the potential's chart", "lambda")
    pre = [expr.simplify(expr.BinOp("+", a.component(nu), lam.partial(nu))) for nu in range(4)]
    if base_change is None:
        new = pre
    else:
        from .fields import _coerce_matrix
        b = _coerce_matrix(base_change)
        if b is None or len(b) != 4:
            raise ValidationError("base-change matrix must be 4 x 4", "base_change")
        new = []
        for mu in range(4):
            acc: expr.Expression = expr.ZERO
            for nu in range(4):
                acc = expr.BinOp("+", acc, expr.BinOp("*", b[mu][nu], pre[nu]))
            new.append(expr.simplify(acc))
    comps = tuple(((e,),) for e in new)
    new_field = CoefficientField(space, 1, comps,
                                 regularity_guard=a.field.regularity_guard,
                                 guard_tol=a.field.guard_tol,
                                 label=(a.field.label + "'") if a.field.label else "gauged")
    return Potential(new_field, a.coupling)


# --------------------------------------------------------------------------
# Gauge-condition residuals
# --------------------------------------------------------------------------

def _point_bindings(space, p: np.ndarray) -> dict:
    return {name: complex(c) for name, c in zip(space.coord_names, p)}


def gauge_residual(a: Potential, condition: str, p) -> complex:
    """Pointwise residual of a gauge condition on A; zero iff the condition holds.

    lorenz:   d^mu A_mu      coulomb: sum_{k=1..3} d^k A_k
    hamilton: A_0            axial:   A_3
    """
    space = a.field.space
    pt = as_point_array(p, space)
    bindings = _point_bindings(space, pt)
    ginv = space.inverse_metric_diag
    if condition == "lorenz":
        total = 0j
        for mu in range(4):
            d = expr.differentiate(a.component(mu), space.coord_names[mu])
            total += ginv[mu] * expr.evaluate_scalar(d, bindings)
        return total
    if condition == "coulomb":
        total = 0j
        for k in range(1, 4):
            d = expr.differentiate(a.component(k), space.coord_names[k])
            total += ginv[k] * expr.evaluate_scalar(d, bindings)
        return total
    if condition == "hamilton":
        return expr.evaluate_scalar(a.component(0), bindings)
    if condition == "axial":
        return expr.evaluate_scalar(a.component(3), bindings)
    raise ValidationError(f"unknown gauge condition {condition!r}; "
                          f"expected one of {GAUGE_CONDITIONS}", "condition")


def _wave_operator(space, body: expr.Expression, axes) -> expr.Expression:
    ginv = space.inverse_metric_diag
    acc: expr.Expression = expr.ZERO
    for mu in axes:
        second = expr.differentiate(expr.differentiate(body, space.coord_names[mu]),
                                    space.coord_names[mu])
        acc = expr.BinOp("+", acc, expr.BinOp("*", expr.Num(complex(ginv[mu])), second))
    return expr.simplify(acc)


def lambda_condition_residual(space, condition: str, lam: ScalarFieldFn, p) -> complex:
    """Residual of the gauge-fixing condition on the gauge function lambda."""
    pt = as_point_array(p, space)
    bindings = _point_bindings(space, pt)
    if condition == "lorenz":
        return expr.evaluate_scalar(_wave_operator(space, lam.body, range(4)), bindings)
    if condition == "coulomb":
        return expr.evaluate_scalar(_wave_operator(space, lam.body, range(1, 4)), bindings)
    if condition == "hamilton":
        return expr.evaluate_scalar(lam.partial(0), bindings)
    if condition == "axial":
        return expr.evaluate_scalar(lam.partial(3), bindings)
    raise ValidationError(f"unknown gauge condition {condition!r}", "condition")


def phi_condition_residual(space, condition: str, lam: ScalarFieldFn,
                           phi: ScalarFieldFn, p) -> complex:
    """Residual of the condition on the residual freedom phi (lambda + phi stays valid)."""
    pt = as_point_array(p, space)
    bindings = _point_bindings(space, pt)
    if condition in ("lorenz", "coulomb"):
        axes = range(4) if condition == "lorenz" else range(1, 4)
        val = expr.evaluate_scalar(_wave_operator(space, phi.body, axes), bindings)
        val += expr.evaluate_scalar(_wave_operator(space, lam.body, axes), bindings)
        return val
    if condition == "hamilton":
        return expr.evaluate_scalar(phi.partial(0), bindings)
    if condition == "axial":
        return expr.evaluate_scalar(phi.partial(3), bindings)
    raise ValidationError(f"unknown gauge condition {condition!r}", "condition")


# --------------------------------------------------------------------------
# Inertial frames
# --------------------------------------------------------------------------

@dataclass
class InertialFrameResult:
    """Normal-frame data read as an inertial frame: lambda = -f0, a = exp(lambda).

    Any frame b * exp(lambda) with a nonzero constant b is strong normal on
    the same region (the full family).
    """

    normal: NormalFrameResult
    coupling: Coupling

    @property
    def residual(self) -> float:
        return self.normal.residual

    @property
    def path_independence_defect(self) -> float:
        return self.normal.path_independence_defect

    def lambda_at(self, point) -> complex:
        return -self.normal.f0_at(point)

    def gauge_at(self, point) -> complex:
        return complex(np.exp(self.lambda_at(point)))

    @property
    def family(self) -> str:
        return "b * exp(lambda) for any constant b != 0"


def solve_inertial_frame(a: Potential, region: RegionSpec, basepoint,
                         tol: float = 1e-8, nodes: int = 129) -> InertialFrameResult:
    """Gauge function lambda = -f0 with A'_mu = A_mu + d lambda/dx^mu = 0 on the region.

    The existence gate is F = 0 on the region lattice; on failure the offending
    tensor components and location are reported.
    """
    gate = is_flat(a.field, region, tol)
    if not gate.flat:
        mu, nu = gate.argmax_pair
        f_val = field_tensor(a, gate.argmax_point).component(mu, nu)
        raise GateFailure(
            f"electromagnetic field tensor does not vanish: F_{mu}{nu} = {f_val.real:.6g} "
            f"at {gate.argmax_point.coords} (max violation {gate.max_violation:.3e}); "
            "no inertial frame exists on this region",
            location=str(gate.argmax_point.coords),
            max_violation=gate.max_violation)
    normal = solve_normal_frame(a.field, region, basepoint, tol=tol, nodes=nodes)
    return InertialFrameResult(normal, a.coupling)


# --------------------------------------------------------------------------
# Aharonov-Bohm phases and the Stokes consistency check
# --------------------------------------------------------------------------

def ab_phase_with_error(a: Potential, loop: PathCurve,
                        nodes: int = DEFAULT_QUAD_NODES) -> tuple[complex, float]:
    return holonomy_with_error(a.transported_field(), loop, nodes)


def ab_phase(a: Potential, loop: PathCurve, nodes: int = DEFAULT_QUAD_NODES) -> complex:
    """Loop transport factor: exp(-circulation) or exp(-i q circulation) for u1."""
    return ab_phase_with_error(a, loop, nodes)[0]


@dataclass
class StokesReport:
    loop_integral: complex
    flux_integral: complex
    defect: float
    plane: tuple[int, int]


def _reject_near_singular(field: CoefficientField, coords: np.ndarray) -> None:
    # surface samples approaching the guard's zero set mean the enclosed disk
    # is not regular; detection is sampling-based, like the flatness lattices
    if field.regularity_guard is None:
        return
    bindings = {name: np.ascontiguousarray(coords[:, ax], dtype=np.complex128)
                for ax, name in enumerate(field.space.coord_names)}
    vals = np.atleast_1d(expr.evaluate(field.regularity_guard, bindings))
    if float(np.min(np.abs(vals))) < np.sqrt(field.guard_tol):
        raise SingularityError("enclosed surface approaches a field singularity")


def stokes_check(a: Potential, loop: PathCurve, loop_nodes: int = DEFAULT_QUAD_NODES,
                 surface_nodes: int = 101) -> StokesReport:
    """Compare the loop circulation of A with the flux of F through the loop.

    The loop must be a simple closed curve in a coordinate 2-plane and must be
    star-shaped about its centroid; the flux integral uses a tensor-product
    Simpson rule on the scaled-boundary parametrization of the enclosed disk.
    A field singularity inside the disk is rejected (Stokes does not apply).
    """
    space = a.field.space
    ends = loop.points_at([loop.s_min, loop.s_max])
    if float(np.max(np.abs(ends[1] - ends[0]))) > 1e-12:
        raise ValidationError("stokes check needs a closed loop", "loop")

    probe = loop.points_at(np.linspace(loop.s_min, loop.s_max, 257))
    extents = probe.max(axis=0) - probe.min(axis=0)
    varying = [int(axis) for axis in np.nonzero(extents > 1e-12)[0]]
    if len(varying) != 2:
        raise ValidationError("loop must lie in a coordinate 2-plane", "loop")
    mu, nu = varying
    center = probe[:-1].mean(axis=0)  # drop the duplicated endpoint

    circulation, _ = line_integral(a.field, loop, loop.s_min, loop.s_max, loop_nodes)

    f_expr = expr.simplify(expr.BinOp(
        "-",
        expr.differentiate(a.component(nu), space.coord_names[mu]),
        expr.differentiate(a.component(mu), space.coord_names[nu])))

    n_rho = _odd(max(5, surface_nodes))
    rho, w_rho = _simpson_weights(0.0, 1.0, n_rho)

    flux = 0j
    span = loop.s_max - loop.s_min
    try:
        for lo, hi in _pieces(loop, loop.s_min, loop.s_max):
            n_u = _odd(max(5, int(round(surface_nodes * (hi - lo) / span))))
            u, w_u = _simpson_weights(lo, hi, n_u)
            pts = loop.points_at(u)
            tans = loop.tangents_at(u) if loop.kind != "polyline" else \
                np.broadcast_to(loop.tangent_at(0.5 * (lo + hi)), pts.shape)
            d = pts - center[None, :]
            cross = d[:, mu] * tans[:, nu] - d[:, nu] * tans[:, mu]      # (n_u,)
            coords = center[None, None, :] + rho[:, None, None] * d[None, :, :]
            flat = coords.reshape(n_rho * n_u, -1)
            a.field.check_regular(flat)
            _reject_near_singular(a.field, flat)
            f_vals = expr.evaluate(f_expr, {
                name: np.ascontiguousarray(flat[:, ax], dtype=np.complex128)
                for ax, name in enumerate(space.coord_names)})
            f_vals = np.broadcast_to(np.atleast_1d(f_vals), (n_rho * n_u,)).reshape(n_rho, n_u)
            inner = np.einsum("r,ru,u->", w_rho * rho, f_vals, w_u * cross)
            flux += complex(inner)
    except SingularityError as e:
        raise SingularityError(
            f"field is singular inside the enclosed surface; Stokes does not apply ({e.message})",
            location=e.location) from None

    return StokesReport(complex(circulation), complex(flux),
                        float(abs(circulation - flux)), (mu, nu))
