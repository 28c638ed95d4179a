import numpy as np
import pytest

from pathtrans import PathCurve, default_chart


@pytest.fixture
def space():
    return default_chart()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_random_smooth_path(space, rng, domain=(0.0, 1.0)):
    """Random C1 expression path with bounded coefficients."""
    comps = []
    for _ in range(space.dim):
        c0, c1, c2 = rng.uniform(-0.8, 0.8, size=3)
        comps.append(f"{c0!r} + {c1!r}*s + {c2!r}*sin(s)")
    return PathCurve.from_expressions(space, comps, domain)


@pytest.fixture
def x_axis_path(space):
    return PathCurve.from_expressions(space, ["s", "0", "0", "0"], (0.0, 2.0))


@pytest.fixture
def unit_circle(space):
    return PathCurve.from_expressions(
        space, ["0", "cos(s)", "sin(s)", "0"], (0.0, 2.0 * np.pi))
