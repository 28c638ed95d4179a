import numpy as np
import pytest

from pathtrans import CATALOG, PathCurve, ScalarFieldFn, catalog, pullback, pullback_many
from pathtrans.errors import SingularityError, ValidationError
from pathtrans import expr


def test_catalog_count_and_names():
    assert len(CATALOG) == 8
    assert set(CATALOG) == {"zero", "constant", "pure_gauge", "uniform_B", "ab_flux",
                            "plane_wave", "slice_demo", "rotation2d"}


def test_unknown_preset():
    with pytest.raises(ValidationError):
        catalog("warp_field")
    with pytest.raises(ValidationError):
        catalog("constant", {})  # missing c


def test_zero_preset(space):
    f = catalog("zero")
    mats = f.matrices_at(np.array([[0.3, -1.0, 2.0, 0.7]]))
    assert np.all(mats == 0)


def test_uniform_b_values():
    f = catalog("uniform_B", {"B": 1.0})
    mats = f.matrices_at(np.array([[0.0, 0.0, 1.0, 0.0]]))[0, :, 0, 0]
    # A_1 = -B x2/2, A_2 = B x1/2 at (0, 0, 1, 0)
    assert mats[1] == pytest.approx(-0.5)
    assert mats[2] == pytest.approx(0.0)
    mats = f.matrices_at(np.array([[0.0, 1.0, 0.0, 0.0]]))[0, :, 0, 0]
    assert mats[1] == pytest.approx(0.0)
    assert mats[2] == pytest.approx(0.5)


def test_pure_gauge_is_symbolic_gradient(space):
    f = catalog("pure_gauge", {"f0": "x1*x2"})
    assert f.components[1][0][0] == expr.Var("x2")
    assert f.components[2][0][0] == expr.Var("x1")
    assert f.components[0][0][0] == expr.ZERO
    assert f.components[3][0][0] == expr.ZERO


def test_rotation2d_shape():
    f = catalog("rotation2d", {"omega": 2.0})
    assert f.fibre_dim == 2
    g0 = f.matrices_at(np.zeros((1, 4)))[0, 0]
    assert np.allclose(g0, [[0, -2], [2, 0]])


def test_pullback_zero_and_constant(space, x_axis_path):
    z = catalog("zero")
    assert np.all(pullback(z, x_axis_path, 0.5) == 0)
    c = catalog("constant", {"c": 2.0})
    assert pullback(c, x_axis_path, 0.7)[0, 0] == pytest.approx(2.0)


def test_pullback_uniform_b_on_circle(unit_circle):
    f = catalog("uniform_B", {"B": 1.0})
    for s in np.linspace(0, 2 * np.pi, 9):
        assert pullback(f, unit_circle, s)[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_pullback_pure_gauge_chain_rule(space, rng):
    # along any path the pullback equals d/ds f0(gamma(s))
    f0 = ScalarFieldFn.from_text(space, "x1^2*x2 + sin(x3)")
    f = catalog("pure_gauge", {"f0": "x1^2*x2 + sin(x3)"})
    from conftest import make_random_smooth_path
    h = 1e-5
    for _ in range(4):
        path = make_random_smooth_path(space, rng)
        for s in np.linspace(0.2, 0.8, 4):
            fd = (f0.value_at(path.point_at(s + h)) - f0.value_at(path.point_at(s - h))) / (2 * h)
            assert abs(pullback(f, path, s)[0, 0] - fd) <= 1e-8


def test_ab_flux_guard(space):
    f = catalog("ab_flux", {"phi": 1.0})
    with pytest.raises(SingularityError):
        f.matrices_at(np.array([[0.0, 0.0, 0.0, 0.0]]))
    with pytest.raises(SingularityError):
        f.matrices_at(np.array([[0.0, 1e-8, 0.0, 0.0]]))
    # fine off the axis
    f.matrices_at(np.array([[0.0, 1.0, 1.0, 0.0]]))


def test_plane_wave_components():
    f = catalog("plane_wave", {"eps": [0, 1, 0, 0], "k": [1, 0, 0, 1]})
    pts = np.array([[0.0, 0.0, 0.0, 0.0], [np.pi, 0.0, 0.0, 0.0]])
    mats = f.matrices_at(pts)[:, :, 0, 0]
    assert mats[0, 1] == pytest.approx(1.0)    # cos(0)
    assert mats[1, 1] == pytest.approx(-1.0)   # cos(pi)
    assert np.allclose(mats[:, [0, 2, 3]], 0.0)


def test_pullback_many_matches_scalar(space, rng):
    from conftest import make_random_smooth_path
    f = catalog("uniform_B", {"B": 0.7})
    path = make_random_smooth_path(space, rng)
    svals = np.linspace(0.1, 0.9, 7)
    batch = pullback_many(f, path, svals)
    for s, m in zip(svals, batch):
        assert np.allclose(m, pullback(f, path, s))


def test_field_rejects_unknown_coordinates(space):
    with pytest.raises(ValidationError):
        catalog("pure_gauge", {"f0": "q*x1"})
