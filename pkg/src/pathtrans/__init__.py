"""Linear transports along paths in vector bundles, specialized to line
bundles and applied to classical electromagnetism: transport integration,
curvature and flatness, holonomy / Aharonov-Bohm phases, and normal and
inertial frame synthesis."""

__version__ = "0.1.0"

from .curvature import (CurvatureAtPoint, FlatnessReport, RegionSpec, curvature_at, is_flat,
                        is_flat_on_slice, transform_three_index)
from .em import (Coupling, FieldTensorAtPoint, InertialFrameResult, Potential, StokesReport,
                 ab_phase, field_tensor, gauge_residual, gauge_transform,
                 lambda_condition_residual, phi_condition_residual, solve_inertial_frame,
                 stokes_check)
from .errors import (ExpressionSyntaxError, GateFailure, PathtransError, SingularityError,
                     ValidationError)
from .fields import (CATALOG, CoefficientField, GaugeChange, ScalarFieldFn, catalog, pullback,
                     pullback_many, pullback_sampler)
from .geometry import ChartedSpace, PathCurve, Point, default_chart, eval_path, raise_index, tangent
from .line_bundle import (NormalFrameResult, OneForm, gauge_change_scalar, holonomy,
                          scalar_transport, solve_normal_frame)
from .transport import (FrameFunction, Lifting, TransportResult, compose, derivation_apply,
                        extract_coefficients, from_frame_function, integrate_sampler,
                        integrate_transport, matrix_exp, per_path_normal_defect,
                        transform_coefficients_law, transform_matrix_law)

__all__ = [name for name in dir() if not name.startswith("_")]
