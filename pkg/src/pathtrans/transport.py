"""General k-dimensional linear transport along paths.

The transport matrix L(t, s) carries fibre vectors from parameter s to t and
solves the matrix ODE

    dL(tau, s)/dtau = -Gamma(tau) L(tau, s),      L(s, s) = identity,

where Gamma is the pullback of the coefficient field along the path.  Fixed
step RK4 (default) and a 2nd-order Magnus midpoint-exponential scheme are
provided; the error estimate comes from one step-halving pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import SingularityError, ValidationError
from .fields import CoefficientField, GaugeChange, pullback, pullback_many, pullback_sampler
from .geometry import PathCurve

SCHEMES = ("rk4", "magnus2")


# --------------------------------------------------------------------------
# Matrix exponential: closed forms for k <= 2, scaling-and-squaring Pade(6)
# --------------------------------------------------------------------------

_PADE6 = [math.factorial(12 - k) * math.factorial(6)
          / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
          for k in range(7)]


def matrix_exp(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    k = m.shape[0]
    if k == 1:
        return np.array([[np.exp(m[0, 0])]], dtype=np.complex128)
    if k == 2:
        p = 0.5 * (m[0, 0] + m[1, 1])
        n = m - p * np.eye(2)
        q = np.sqrt(complex(-np.linalg.det(n)))
        if abs(q) < 1e-8:
            cosh_q = 1.0 + q * q / 2.0
            sinhc = 1.0 + q * q / 6.0
        else:
            cosh_q = np.cosh(q)
            sinhc = np.sinh(q) / q
        return np.exp(p) * (cosh_q * np.eye(2) + sinhc * n)
    return _expm_pade6(m)


def _expm_pade6(m: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(m, np.inf)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    a = m / (2 ** squarings)
    k = a.shape[0]
    eye = np.eye(k, dtype=np.complex128)
    u = np.zeros_like(a)
    v = np.zeros_like(a)
    power = eye
    for j, c in enumerate(_PADE6):
        term = c * power
        if j % 2:
            u = u + term
        else:
            v = v + term
        if j < 6:
            power = power @ a
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


# --------------------------------------------------------------------------
# Result and auxiliary types
# --------------------------------------------------------------------------

@dataclass
class TransportResult:
    """Transport matrix L(s_to, s_from) along a path, with an error estimate."""

    matrix: np.ndarray
    s_from: float
    s_to: float
    path_id: str
    est_error: float

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if not np.all(np.isfinite(self.matrix.view(float))):
            raise SingularityError("transport produced non-finite entries")
        if np.linalg.det(self.matrix) == 0:
            raise SingularityError("transport matrix is singular")
        if not np.isfinite(self.est_error):
            raise SingularityError("error estimate is not finite")

    @property
    def fibre_dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FrameFunction:
    """Expression-backed frame matrix F(s) generating L(t, s) = F(t)^-1 F(s).

    ``left_factor`` realizes the representation freedom: any constant
    invertible D yields the same transport through F -> D F.
    """

    entries: tuple[tuple[expr.Expression, ...], ...]
    left_factor: np.ndarray | None = None
    param: str = "s"

    @classmethod
    def from_texts(cls, rows, param: str = "s") -> "FrameFunction":
        parsed = tuple(tuple(expr.parse(c) if isinstance(c, str) else c for c in row) for row in rows)
        return cls(parsed, param=param)

    def with_left_factor(self, d: np.ndarray) -> "FrameFunction":
        return FrameFunction(self.entries, np.asarray(d, dtype=np.complex128), self.param)

    def matrix_at(self, s: float) -> np.ndarray:
        k = len(self.entries)
        out = np.zeros((k, k), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                out[i, j] = expr.evaluate_scalar(self.entries[i][j], {self.param: complex(s)})
        if self.left_factor is not None:
            out = self.left_factor @ out
        if np.linalg.det(out) == 0:
            raise SingularityError(f"frame function singular at s={s}")
        return out


@dataclass(frozen=True)
class Lifting:
    """Components of a lifting along a path: k expressions in the parameter."""

    components: tuple[expr.Expression, ...]
    param: str = "s"

    @classmethod
    def from_texts(cls, texts, param: str = "s") -> "Lifting":
        return cls(tuple(expr.parse(t) if isinstance(t, str) else t for t in texts), param=param)

    def values_at(self, s: float) -> np.ndarray:
        return np.array([expr.evaluate_scalar(c, {self.param: complex(s)}) for c in self.components])

    def derivative_at(self, s: float) -> np.ndarray:
        return np.array([expr.evaluate_scalar(expr.differentiate(c, self.param), {self.param: complex(s)})
                         for c in self.components])


# --------------------------------------------------------------------------
# Fixed-step integration
# --------------------------------------------------------------------------

def _run_fixed(sampler, k: int, s: float, t: float, steps: int, scheme: str) -> np.ndarray:
    h = (t - s) / steps
    eye = np.eye(k, dtype=np.complex128)
    if scheme == "rk4":
        taus = s + np.arange(2 * steps + 1) * (h / 2.0)
        gam = np.asarray(sampler(taus), dtype=np.complex128)
        l = eye.copy()
        for j in range(steps):
            g0, g1, g2 = gam[2 * j], gam[2 * j + 1], gam[2 * j + 2]
            k1 = -(g0 @ l)
            k2 = -(g1 @ (l + (h / 2.0) * k1))
            k3 = -(g1 @ (l + (h / 2.0) * k2))
            k4 = -(g2 @ (l + h * k3))
            l = l + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return l
    if scheme == "magnus2":
        mids = s + (np.arange(steps) + 0.5) * h
        gam = np.asarray(sampler(mids), dtype=np.complex128)
        if k == 1:
            return np.array([[np.exp(-h * np.sum(gam[:, 0, 0]))]], dtype=np.complex128)
        l = eye.copy()
        for j in range(steps):
            l = matrix_exp(-h * gam[j]) @ l
        return l
    raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}", "numeric.scheme")


def integrate_sampler(sampler, k: int, s: float, t: float, steps: int = 200,
                      scheme: str = "rk4", path_id: str = "sampler") -> TransportResult:
    """Integrate the transport ODE for an arbitrary generator sampler."""
    if steps < 1:
        raise ValidationError("steps must be >= 1", "numeric.steps")
    if t == s:
        return TransportResult(np.eye(k, dtype=np.complex128), s, t, path_id, 0.0)
    coarse = _run_fixed(sampler, k, s, t, steps, scheme)
    fine = _run_fixed(sampler, k, s, t, 2 * steps, scheme)
    est = float(np.max(np.abs(fine - coarse)))
    return TransportResult(fine, s, t, path_id, est)


def integrate_transport(field: CoefficientField, path: PathCurve, s: float, t: float,
                        steps: int = 200, scheme: str = "rk4") -> TransportResult:
    """L(t, s; gamma) for the given coefficient field along the path."""
    path._check_params(np.asarray([s, t], dtype=float))
    sampler = pullback_sampler(field, path)
    return integrate_sampler(sampler, field.fibre_dim, float(s), float(t),
                             steps=steps, scheme=scheme, path_id=path.path_id)


# --------------------------------------------------------------------------
# Algebra on transports
# --------------------------------------------------------------------------

def compose(l1: TransportResult, l2: TransportResult) -> TransportResult:
    """L(t, s) . L(s, r) -> L(t, r); endpoints and path must match."""
    if l1.path_id != l2.path_id:
        raise ValidationError("cannot compose transports along different paths", "compose")
    if l1.s_from != l2.s_to:
        raise ValidationError(
            f"endpoint mismatch: first starts at {l1.s_from}, second ends at {l2.s_to}", "compose")
    return TransportResult(l1.matrix @ l2.matrix, l2.s_from, l1.s_to, l1.path_id,
                           l1.est_error + l2.est_error)


def from_frame_function(f: FrameFunction, s: float, t: float,
                        path_id: str = "frame") -> TransportResult:
    """L(t, s) = F(t)^-1 F(s); exact up to inversion round-off."""
    fs = f.matrix_at(s)
    ft = f.matrix_at(t)
    try:
        mat = np.linalg.solve(ft, fs)
    except np.linalg.LinAlgError as e:
        raise SingularityError(f"frame function not invertible: {e}") from None
    return TransportResult(mat, s, t, path_id, 0.0)


def extract_coefficients(source, path: PathCurve, s: float, h: float, *,
                         steps: int = 200, scheme: str = "rk4") -> np.ndarray:
    """2-index coefficients from the transport: dL(s, t)/dt at t = s, central difference.

    ``source`` is either a CoefficientField or a callable (to, frm) -> matrix.
    """
    if h <= 0:
        raise ValidationError("finite-difference step must be positive", "h")
    path._check_params(np.asarray([s - h, s + h], dtype=float))
    if callable(source):
        lmat = source
    else:
        def lmat(to, frm):
            return integrate_transport(source, path, frm, to, steps=steps, scheme=scheme).matrix
    plus = lmat(s, s + h)
    minus = lmat(s, s - h)
    return (plus - minus) / (2.0 * h)


def derivation_apply(field: CoefficientField, path: PathCurve, lifting: Lifting,
                     s: float) -> np.ndarray:
    """Components of the derivation:  d lambda/ds + Gamma(s) lambda(s)."""
    gam = pullback(field, path, s)
    lam = lifting.values_at(s)
    if lam.shape[0] != field.fibre_dim:
        raise ValidationError("lifting dimension does not match the fibre", "lifting")
    return lifting.derivative_at(s) + gam @ lam


# --------------------------------------------------------------------------
# Frame-change transformation laws along a path
# --------------------------------------------------------------------------

def transform_matrix_law(l: TransportResult, change: GaugeChange) -> TransportResult:
    """L'(t, s) = A(t)^-1 L(t, s) A(s) for a path-wise change of the fibre frame."""
    a_from = change.path_matrix_at(l.s_from)[0]
    a_to = change.path_matrix_at(l.s_to)[0]
    try:
        mat = np.linalg.solve(a_to, l.matrix @ a_from)
        scale = np.linalg.norm(np.linalg.inv(a_to), 2) * np.linalg.norm(a_from, 2)
    except np.linalg.LinAlgError as e:
        raise SingularityError(f"frame change not invertible: {e}") from None
    return TransportResult(mat, l.s_from, l.s_to, l.path_id, l.est_error * float(scale))


def transform_coefficients_law(source, change: GaugeChange, path: PathCurve | None = None):
    """Sampler for Gamma'(s) = A^-1 Gamma A + A^-1 dA/ds.

    ``source`` is a vectorized generator sampler, or a CoefficientField when
    ``path`` is given.  The returned sampler is vectorized the same way.
    """
    if isinstance(source, CoefficientField):
        if path is None:
            raise ValidationError("a path is required to sample a coefficient field", "path")
        base = pullback_sampler(source, path)
    else:
        base = source

    def sampler(s_values):
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        gam = np.asarray(base(s), dtype=np.complex128)
        a = change.path_matrix_at(s)
        da = change.path_matrix_derivative_at(s)
        inv = np.linalg.inv(a)
        return inv @ gam @ a + inv @ da

    return sampler


def per_path_normal_defect(field: CoefficientField, path: PathCurve, probes: int = 7,
                           steps: int = 400, scheme: str = "rk4", fd_step: float = 3e-5) -> float:
    """Residual of the per-path normal frame A(s) = L(s, s_min).

    Transforms the 2-index coefficients with the integrated transport itself;
    the returned max |Gamma'| measures how well the construction flattens the
    coefficients along the path (integration plus finite-difference error).
    """
    a, b = path.s_min, path.s_max
    span = b - a
    if span <= 0:
        raise ValidationError("path domain must have positive length", "path.domain")
    h = fd_step * span
    svals = np.linspace(a + 0.1 * span, b - 0.1 * span, probes)
    sampler = pullback_sampler(field, path)
    k = field.fibre_dim
    worst = 0.0
    for s in svals:
        a_mid = _run_fixed(sampler, k, a, s, steps, scheme)
        a_plus = _run_fixed(sampler, k, a, s + h, steps, scheme)
        a_minus = _run_fixed(sampler, k, a, s - h, steps, scheme)
        da = (a_plus - a_minus) / (2.0 * h)
        inv = np.linalg.inv(a_mid)
        gam_prime = inv @ pullback(field, path, s) @ a_mid + inv @ da
        worst = max(worst, float(np.max(np.abs(gam_prime))))
    return worst
