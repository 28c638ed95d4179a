"""Curvature of coefficient fields and flatness decisions on sampled regions.

The curvature components are

    R_munu = -dGamma_mu/dx^nu + dGamma_nu/dx^mu + [Gamma_mu, Gamma_nu]

computed with exact symbolic partial derivatives and evaluated numerically.
Flatness on a box (or on a coordinate slice, where only the free index pairs
are tested) is decided on a sample lattice: a finite sample cannot certify
flatness everywhere, so results carry the max violation and its location.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import expr
from .errors import ValidationError
from .fields import CoefficientField, GaugeChange, ScalarFieldFn
from .geometry import Point

DEFAULT_FLAT_TOL = 1e-8
DEFAULT_SAMPLES_PER_AXIS = 9


@dataclass(frozen=True)
class RegionSpec:
    """A sampled box, optionally with some coordinates frozen to constants."""

    intervals: tuple[tuple[float, float], ...]
    samples: tuple[int, ...]
    frozen: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivals)
        object.__setattr__(self, "samples", tuple(int(n) for n in self.samples))
        object.__setattr__(self, "frozen", tuple(sorted((int(a), float(v)) for a, v in self.frozen)))
        if len(self.samples) != len(ivals):
            raise ValidationError("need one sample count per interval", "region.samples")
        frozen_axes = {a for a, _ in self.frozen}
        if len(frozen_axes) != len(self.frozen):
            raise ValidationError("an axis may be frozen only once", "region.frozen")
        for a, (lo, hi) in enumerate(ivals):
            if hi < lo:
                raise ValidationError("region intervals must be nonempty", "region.intervals")
            if a not in frozen_axes and self.samples[a] < 2:
                raise ValidationError("free axes need at least 2 samples", "region.samples")
        if any(a < 0 or a >= len(ivals) for a in frozen_axes):
            raise ValidationError("frozen axis index out of range", "region.frozen")

    @classmethod
    def box(cls, intervals, samples=None) -> "RegionSpec":
        n = len(intervals)
        if samples is None:
            samples = [DEFAULT_SAMPLES_PER_AXIS] * n
        return cls(tuple(tuple(iv) for iv in intervals), tuple(samples))

    @classmethod
    def slice_of(cls, intervals, frozen: dict, samples=None) -> "RegionSpec":
        n = len(intervals)
        if samples is None:
            samples = [DEFAULT_SAMPLES_PER_AXIS] * n
        return cls(tuple(tuple(iv) for iv in intervals), tuple(samples),
                   tuple(frozen.items()))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def free_axes(self) -> tuple[int, ...]:
        frozen_axes = {a for a, _ in self.frozen}
        return tuple(a for a in range(self.dim) if a not in frozen_axes)

    def axis_values(self) -> list[np.ndarray]:
        frozen_map = dict(self.frozen)
        out = []
        for a, (lo, hi) in enumerate(self.intervals):
            if a in frozen_map:
                out.append(np.array([frozen_map[a]]))
            else:
                out.append(np.linspace(lo, hi, self.samples[a]))
        return out

    def lattice(self) -> np.ndarray:
        """All sample points, shape (P, dim), in row-major axis order."""
        axes = self.axis_values()
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def center(self) -> np.ndarray:
        frozen_map = dict(self.frozen)
        return np.array([frozen_map.get(a, 0.5 * (lo + hi))
                         for a, (lo, hi) in enumerate(self.intervals)])

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return all(lo - 1e-12 <= c <= hi + 1e-12 for c, (lo, hi) in zip(p, self.intervals))


@dataclass
class CurvatureAtPoint:
    """All R_munu matrices at one point; antisymmetric in (mu, nu) by construction."""

    point: Point
    components: np.ndarray  # (dim, dim, k, k)

    def component(self, mu: int, nu: int) -> np.ndarray:
        return self.components[mu, nu]


@dataclass
class FlatnessReport:
    flat: bool
    max_violation: float
    argmax_point: Point
    argmax_pair: tuple[int, int]
    sample_count: int


# --------------------------------------------------------------------------
# Curvature evaluation
# --------------------------------------------------------------------------

def _curvature_on(field: CoefficientField, points: np.ndarray,
                  pairs: list[tuple[int, int]]) -> np.ndarray:
    """R_munu for the given (mu < nu) pairs on many points; shape (m, npairs, k, k)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    field.check_regular(points)
    m = points.shape[0]
    k = field.fibre_dim
    names = field.space.coord_names
    bindings = {name: np.ascontiguousarray(points[:, a], dtype=np.complex128)
                for a, name in enumerate(names)}

    def eval_matrix(entries) -> np.ndarray:
        out = np.zeros((m, k, k), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                out[:, i, j] = expr.evaluate(entries[i][j], bindings)
        return out

    gammas = {}
    needed_axes = sorted({a for pair in pairs for a in pair})
    for mu in needed_axes:
        gammas[mu] = eval_matrix(field.components[mu])

    out = np.zeros((m, len(pairs), k, k), dtype=np.complex128)
    for idx, (mu, nu) in enumerate(pairs):
        d_mu_by_nu = tuple(tuple(expr.differentiate(field.components[mu][i][j], names[nu])
                                 for j in range(k)) for i in range(k))
        d_nu_by_mu = tuple(tuple(expr.differentiate(field.components[nu][i][j], names[mu])
                                 for j in range(k)) for i in range(k))
        r = -eval_matrix(d_mu_by_nu) + eval_matrix(d_nu_by_mu)
        if k > 1:
            r = r + gammas[mu] @ gammas[nu] - gammas[nu] @ gammas[mu]
        out[:, idx] = r
    return out


def curvature_at(field: CoefficientField, p) -> CurvatureAtPoint:
    """All curvature matrices at a point (computed for mu < nu, mirrored)."""
    point = p if isinstance(p, Point) else Point(tuple(np.asarray(p, dtype=float)))
    dim, k = field.space.dim, field.fibre_dim
    pairs = [(mu, nu) for mu in range(dim) for nu in range(mu + 1, dim)]
    vals = _curvature_on(field, point.as_array()[None, :], pairs)[0]
    comps = np.zeros((dim, dim, k, k), dtype=np.complex128)
    for idx, (mu, nu) in enumerate(pairs):
        comps[mu, nu] = vals[idx]
        comps[nu, mu] = -vals[idx]
    return CurvatureAtPoint(point, comps)


def _flatness(field: CoefficientField, region: RegionSpec, tol: float,
              pairs: list[tuple[int, int]]) -> FlatnessReport:
    if tol <= 0:
        raise ValidationError("tolerance must be positive", "tol")
    if region.dim != field.space.dim:
        raise ValidationError("region dimension does not match the chart", "region")
    points = region.lattice()
    if not pairs:
        return FlatnessReport(True, 0.0, Point(tuple(points[0])), (0, 0), points.shape[0])
    vals = _curvature_on(field, points, pairs)
    mags = np.abs(vals).reshape(points.shape[0], len(pairs), -1).max(axis=2)
    flat_idx = int(np.argmax(mags))
    p_idx, pair_idx = divmod(flat_idx, len(pairs))
    max_violation = float(mags[p_idx, pair_idx])
    return FlatnessReport(max_violation <= tol, max_violation,
                          Point(tuple(points[p_idx])), pairs[pair_idx], points.shape[0])


def is_flat(field: CoefficientField, region: RegionSpec,
            tol: float = DEFAULT_FLAT_TOL) -> FlatnessReport:
    """Test R_munu = 0 for every index pair on the region lattice."""
    dim = field.space.dim
    pairs = [(mu, nu) for mu in range(dim) for nu in range(mu + 1, dim)]
    return _flatness(field, region, tol, pairs)


def is_flat_on_slice(field: CoefficientField, region: RegionSpec,
                     tol: float = DEFAULT_FLAT_TOL) -> FlatnessReport:
    """Test only the free (unfrozen) index pairs on a coordinate slice."""
    free = region.free_axes
    pairs = [(mu, nu) for i, mu in enumerate(free) for nu in free[i + 1:]]
    return _flatness(field, region, tol, pairs)


# --------------------------------------------------------------------------
# 3-index transformation law
# --------------------------------------------------------------------------

def _expr_matmul(a, b, k: int):
    out = []
    for i in range(k):
        row = []
        for j in range(k):
            acc: expr.Expression = expr.ZERO
            for l in range(k):
                acc = expr.BinOp("+", acc, expr.BinOp("*", a[i][l], b[l][j]))
            row.append(expr.simplify(acc))
        out.append(tuple(row))
    return tuple(out)


def _expr_det(mat, k: int) -> expr.Expression:
    if k == 1:
        return mat[0][0]
    acc: expr.Expression = expr.ZERO
    for j in range(k):
        minor = [tuple(row[:j] + row[j + 1:]) for row in mat[1:]]
        cof = expr.BinOp("*", mat[0][j], _expr_det(tuple(minor), k - 1))
        acc = expr.BinOp("+", acc, cof if j % 2 == 0 else expr.Neg(cof))
    return expr.simplify(acc)


def _expr_inverse(mat, k: int):
    det = _expr_det(mat, k)
    if k == 1:
        return ((expr.simplify(expr.BinOp("/", expr.ONE, det)),),)
    rows = []
    for i in range(k):
        row = []
        for j in range(k):
            minor = tuple(tuple(r[:i] + r[i + 1:]) for li, r in enumerate(mat) if li != j)
            cof = _expr_det(minor, k - 1)
            signed = cof if (i + j) % 2 == 0 else expr.Neg(cof)
            row.append(expr.simplify(expr.BinOp("/", signed, det)))
        rows.append(tuple(row))
    return tuple(rows)


def transform_three_index(field: CoefficientField, change: GaugeChange) -> CoefficientField:
    """Gamma'_mu = B_mu^nu A^-1 (Gamma_nu A + d A / dx^nu), built symbolically.

    ``change`` carries either a bundle scalar a(x) or a bundle matrix A(x),
    plus an optional base-frame matrix B of expressions.
    """
    space = field.space
    names = space.coord_names
    dim, k = space.dim, field.fibre_dim
    if change.path_matrix is not None:
        raise ValidationError("3-index transformation needs a change defined on the base, "
                              "not along a path", "change")

    if change.scalar is not None:
        a = change.scalar.body
        pre = []
        for nu in range(dim):
            ratio = expr.simplify(expr.BinOp("/", expr.differentiate(a, names[nu]), a))
            mat = tuple(tuple(
                expr.simplify(expr.BinOp("+", field.components[nu][i][j], ratio))
                if i == j else field.components[nu][i][j]
                for j in range(k)) for i in range(k))
            pre.append(mat)
    else:
        amat = change.bundle_matrix
        if len(amat) != k:
            raise ValidationError("bundle matrix must match the fibre dimension", "change")
        if k > 3:
            raise ValidationError("symbolic inversion is supported for fibre dim <= 3", "change")
        ainv = _expr_inverse(amat, k)
        pre = []
        for nu in range(dim):
            da = tuple(tuple(expr.differentiate(amat[i][j], names[nu]) for j in range(k))
                       for i in range(k))
            ga = _expr_matmul(field.components[nu], amat, k)
            summed = tuple(tuple(expr.simplify(expr.BinOp("+", ga[i][j], da[i][j]))
                                 for j in range(k)) for i in range(k))
            pre.append(_expr_matmul(ainv, summed, k))

    if change.base_change is None:
        new_components = tuple(pre)
    else:
        b = change.base_change
        if len(b) != dim:
            raise ValidationError("base-change matrix must be dim x dim", "change")
        new_components = []
        for mu in range(dim):
            mat = []
            for i in range(k):
                row = []
                for j in range(k):
                    acc: expr.Expression = expr.ZERO
                    for nu in range(dim):
                        acc = expr.BinOp("+", acc, expr.BinOp("*", b[mu][nu], pre[nu][i][j]))
                    row.append(expr.simplify(acc))
                mat.append(tuple(row))
            new_components.append(tuple(mat))
        new_components = tuple(new_components)

    return CoefficientField(space, k, new_components,
                            regularity_guard=field.regularity_guard,
                            guard_tol=field.guard_tol,
                            label=(field.label + "'") if field.label else "transformed")
