import numpy as np
import pytest

from pathtrans import ChartedSpace, PathCurve, default_chart, eval_path, raise_index, tangent
from pathtrans.errors import ValidationError

from conftest import make_random_smooth_path


def test_default_chart():
    space = default_chart()
    assert space.dim == 4
    assert space.coord_names == ("x0", "x1", "x2", "x3")
    assert space.metric_diag == (1.0, -1.0, -1.0, -1.0)
    assert space.inverse_metric_diag == (1.0, -1.0, -1.0, -1.0)


def test_chart_validation():
    with pytest.raises(ValidationError):
        ChartedSpace(2, ("x", "x"), (1.0, 1.0))
    with pytest.raises(ValidationError):
        ChartedSpace(2, ("x", "y"), (1.0, 0.0))
    with pytest.raises(ValidationError):
        ChartedSpace(0, (), ())


def test_eval_path_line(space):
    path = PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0, 1))
    assert eval_path(path, 0.5).coords == (0.5, 0.0, 0.0, 0.0)


def test_eval_path_circle(space, unit_circle):
    assert np.allclose(eval_path(unit_circle, 0.0).coords, (0, 1, 0, 0))


def test_eval_polyline_interpolation():
    space2 = ChartedSpace(2, ("x", "y"), (1.0, 1.0))
    poly = PathCurve.polyline(space2, [(0, 0), (1, 0), (1, 1)], (0, 1))
    assert np.allclose(eval_path(poly, 0.75).coords, (1.0, 0.5))
    # exact at the vertices
    assert np.allclose(eval_path(poly, 0.0).coords, (0.0, 0.0))
    assert np.allclose(eval_path(poly, 0.5).coords, (1.0, 0.0))
    assert np.allclose(eval_path(poly, 1.0).coords, (1.0, 1.0))


def test_tangent_line_and_circle(space, unit_circle):
    path = PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0, 1))
    for s in (0.0, 0.3, 1.0):
        assert np.allclose(tangent(path, s), (1, 0, 0, 0))
    assert np.allclose(tangent(unit_circle, 0.0), (0, 0, 1, 0))


def test_tangent_polyline_chord():
    space2 = ChartedSpace(2, ("x", "y"), (1.0, 1.0))
    poly = PathCurve.polyline(space2, [(0, 0), (2, 0)], (0, 1))
    assert np.allclose(tangent(poly, 0.3), (2.0, 0.0))


def test_polyline_vertex_tangent_tie_break():
    space2 = ChartedSpace(2, ("x", "y"), (1.0, 1.0))
    poly = PathCurve.polyline(space2, [(0, 0), (1, 0), (1, 1)], (0, 1))
    # interior vertex: right segment; final parameter: left segment
    assert np.allclose(tangent(poly, 0.5), (0.0, 2.0))
    assert np.allclose(tangent(poly, 1.0), (0.0, 2.0))
    assert np.allclose(tangent(poly, 0.0), (2.0, 0.0))


def test_degenerate_polyline_segment_rejected():
    space2 = ChartedSpace(2, ("x", "y"), (1.0, 1.0))
    poly = PathCurve.polyline(space2, [(0, 0), (0, 0), (1, 1)], (0, 1))
    with pytest.raises(ValidationError):
        tangent(poly, 0.25)


def test_parameter_domain_enforced(space):
    path = PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0, 1))
    with pytest.raises(ValidationError):
        eval_path(path, 1.5)


def test_tangent_matches_central_differences(space, rng):
    h = 1e-5
    for _ in range(5):
        path = make_random_smooth_path(space, rng)
        for s in np.linspace(0.1, 0.9, 5):
            fd = (path.point_at(s + h) - path.point_at(s - h)) / (2 * h)
            assert np.max(np.abs(path.tangent_at(s) - fd)) <= 1e-8


def test_raise_index_cases(space):
    assert raise_index(space, [1, 1, 0, 0]) == [1.0, -1.0, 0.0, 0.0]
    euclid = ChartedSpace(4, ("a", "b", "c", "d"), (1.0, 1.0, 1.0, 1.0))
    assert raise_index(euclid, [3, -2, 0.5, 7]) == [3.0, -2.0, 0.5, 7.0]
    heavy = ChartedSpace(4, ("a", "b", "c", "d"), (2.0, -1.0, -1.0, -1.0))
    assert raise_index(heavy, [4, 0, 0, 0]) == [2.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValidationError):
        raise_index(space, [1, 2])


def test_path_ids_stable_and_distinct(space):
    p1 = PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0, 1))
    p2 = PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0, 1))
    p3 = PathCurve.from_expressions(space, ["s", "s", "0", "0"], (0, 1))
    assert p1.path_id == p2.path_id
    assert p1.path_id != p3.path_id
