import numpy as np
import pytest
from numpy.testing import assert_allclose

from condsurv import SurvivalSample, SurvivalCurve, TimeGrid, integrate_on_grid


def test_sample_basic_properties():
    s = SurvivalSample(x=[0.1, 0.2, 0.3], z=[1, 2, 3], delta=[1, 0, 1])
    assert s.n == 3
    assert s.n_events == 2
    assert s.censoring_fraction == pytest.approx(1 / 3)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(x=[0.1, 0.2], z=[1.0], delta=[1]),
        dict(x=[], z=[], delta=[]),
        dict(x=[0.1], z=[-1.0], delta=[1]),
        dict(x=[0.1], z=[np.inf], delta=[1]),
        dict(x=[np.nan], z=[1.0], delta=[1]),
        dict(x=[0.1], z=[1.0], delta=[2]),
        dict(x=[0.1], z=[1.0], delta=[0.5]),
    ],
)
def test_sample_validation(kwargs):
    with pytest.raises(ValueError):
        SurvivalSample(**kwargs)


def test_sample_arrays_are_readonly():
    s = SurvivalSample(x=[0.1], z=[1.0], delta=[1])
    with pytest.raises(ValueError):
        s.x[0] = 2.0


def test_uniform_grid_hits_t_max_exactly():
    grid = TimeGrid.uniform(0.8654091913011425, 100)
    assert grid.n_points == 100
    assert grid.points[-1] == 0.8654091913011425
    assert np.all(np.diff(grid.points) > 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid([1.0])
    with pytest.raises(ValueError):
        TimeGrid([1.0, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([-1.0, 1.0])
    with pytest.raises(ValueError):
        TimeGrid.uniform(0.0, 10)


def test_cell_widths_partition_interval():
    grid = TimeGrid([0.5, 1.0, 2.5])
    assert_allclose(grid.cell_widths, [0.5, 0.5, 1.5])
    assert grid.cell_widths.sum() == pytest.approx(grid.t_max)


def test_integrate_constant_and_linear():
    grid = TimeGrid.uniform(2.0, 200)
    assert integrate_on_grid(np.ones(200), grid) == pytest.approx(2.0)
    # right-endpoint cell rule on f(t) = t: sum t_k * dt
    vals = grid.points
    exact = 0.5 * 2.0**2
    assert integrate_on_grid(vals, grid) == pytest.approx(exact, rel=1e-2)


def test_curve_validation():
    grid = TimeGrid([1.0, 2.0])
    SurvivalCurve(grid=grid, values=[1.0, 0.5], estimator_tag="beran", x0=0.0, h=1.0)
    with pytest.raises(ValueError):
        SurvivalCurve(grid=grid, values=[0.5, 1.0], estimator_tag="beran", x0=0.0, h=1.0)
    with pytest.raises(ValueError):
        SurvivalCurve(grid=grid, values=[1.2, 0.5], estimator_tag="beran", x0=0.0, h=1.0)
    with pytest.raises(ValueError):
        SurvivalCurve(grid=grid, values=[1.0], estimator_tag="beran", x0=0.0, h=1.0)
