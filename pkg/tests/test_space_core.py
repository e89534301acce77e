import math

import numpy as np
import pytest
from hypothesis import given, settings

from hyperfill.errors import CapacityExceeded, InvalidParameter, InvariantViolation, ParseError
from hyperfill.space_core import ball_measure, gen_cantor, gen_grid, load_space, make_space, verify_doubling

from conftest import line_spaces


def test_cantor_sample_shape():
    space = gen_cantor(4, 0.9)
    assert space.size == 16
    assert space.base_index == 0
    assert math.isclose(space.total_mass, 1.0)
    assert math.isclose(space.diameter, 0.9)
    assert np.all(space.weights == 2.0 ** -4)


def test_cantor_rejects_bad_scale():
    with pytest.raises(InvalidParameter):
        gen_cantor(4, 1.0)
    with pytest.raises(CapacityExceeded):
        gen_cantor(40, 0.9)


def test_grid_diagonal_is_scale():
    space = gen_grid(2, 5, 0.6)
    assert space.size == 25
    assert math.isclose(space.diameter, 0.6, rel_tol=1e-12)
    with pytest.raises(InvalidParameter):
        gen_grid(3, 5, 0.6)


def test_matrix_space(three_point_space):
    assert three_point_space.distance(0, 2) == pytest.approx(0.8)
    assert ball_measure(three_point_space, 0, 0.55) == pytest.approx(2 / 3)
    assert ball_measure(three_point_space, 0, 0.5) == pytest.approx(1 / 3)


def test_one_point_space_is_allowed(one_point_space):
    assert one_point_space.size == 1
    assert one_point_space.diameter == 0.0


def test_diameter_must_stay_below_one():
    with pytest.raises(InvariantViolation):
        make_space("euclidean", [0.5, 0.5], coordinates=[[0.0], [1.0]])


def test_duplicate_points_rejected():
    with pytest.raises(InvariantViolation):
        make_space("euclidean", [0.5, 0.5], coordinates=[[0.1], [0.1]])


def test_triangle_failure_rejected():
    bad = [[0.0, 0.1, 0.9], [0.1, 0.0, 0.1], [0.9, 0.1, 0.0]]
    with pytest.raises(InvariantViolation):
        make_space("matrix", [1.0, 1.0, 1.0], matrix=bad)


def test_weights_must_be_positive():
    with pytest.raises(InvariantViolation):
        make_space("euclidean", [1.0, 0.0], coordinates=[[0.0], [0.5]])


def test_load_space_defaults_to_uniform_weights():
    space = load_space({"metric": "euclidean", "points": [[0.0], [0.3], [0.6]]})
    assert np.allclose(space.weights, 1 / 3)
    with pytest.raises(ParseError):
        load_space({"metric": "taxicab", "points": [[0.0]]})
    with pytest.raises(ParseError):
        load_space({"metric": "matrix"})


def test_doubling_of_cantor_is_bounded():
    space = gen_cantor(6, 0.9)
    report = verify_doubling(space, [3.0 ** -k for k in range(1, 5)])
    assert 1.0 <= report.ratio <= 8.0
    with pytest.raises(InvalidParameter):
        verify_doubling(space, [])


@settings(deadline=None, max_examples=30)
@given(line_spaces())
def test_ball_of_diameter_holds_everything(space):
    for x in range(space.size):
        assert ball_measure(space, x, 1.0) == pytest.approx(space.total_mass)
