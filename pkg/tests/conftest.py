import math

import numpy as np
import pytest
from hypothesis import strategies as st

from hyperfill.filling_builder import build_filling, build_nets
from hyperfill.space_core import gen_cantor, make_space


@pytest.fixture
def three_point_space():
    matrix = [[0.0, 0.5, 0.8], [0.5, 0.0, 0.6], [0.8, 0.6, 0.0]]
    return make_space("matrix", [1 / 3, 1 / 3, 1 / 3], matrix=matrix, label="three-point")


@pytest.fixture
def one_point_space():
    return make_space("euclidean", [1.0], coordinates=[[0.0]], label="one-point")


@pytest.fixture(scope="session")
def cantor8():
    return gen_cantor(8, 0.9)


@pytest.fixture(scope="session")
def cantor_fillings(cantor8):
    """Cantor(depth 8, scale 0.9) fillings with tau = 1.5 and 8 levels, keyed by alpha."""
    out = {}
    for alpha in (2.0, 3.0):
        nets = build_nets(cantor8, alpha, 8)
        out[alpha] = build_filling(cantor8, nets, 1.5)
    return out


@pytest.fixture(scope="session")
def deep_filling():
    """Small Cantor sample with 14 levels: long rays for trace detection."""
    space = gen_cantor(4, 0.9)
    return build_filling(space, build_nets(space, 2.0, 14), 1.5)


@pytest.fixture(scope="session")
def tall_filling():
    """Four-point Cantor sample with 40 levels: slow profiles settle below the detector tolerance."""
    space = gen_cantor(2, 0.9)
    return build_filling(space, build_nets(space, 2.0, 40), 1.5)


@pytest.fixture(scope="session")
def deep_filling_alpha3():
    space = gen_cantor(4, 0.9)
    return build_filling(space, build_nets(space, 3.0, 12), 1.5)


@st.composite
def line_spaces(draw, min_points=1, max_points=24):
    """Weighted samples of distinct points in [0, 0.9]."""
    n = draw(st.integers(min_points, max_points))
    xs = draw(st.lists(st.integers(0, 900), min_size=n, max_size=n, unique=True))
    coords = [[x / 1000.0] for x in xs]
    ws = draw(st.lists(st.floats(0.1, 10.0), min_size=n, max_size=n))
    total = math.fsum(ws)
    return make_space("euclidean", [w / total for w in ws], coordinates=coords)


@st.composite
def smooth_terms(draw, max_terms=3):
    k = draw(st.integers(1, max_terms))
    return [
        (draw(st.floats(-1.0, 1.0)), draw(st.floats(1.5, 3.0)))
        for _ in range(k)
    ]


def assert_close(a, b, tol):
    assert abs(a - b) <= tol, f"{a!r} vs {b!r} (tol {tol})"


__all__ = ["assert_close", "line_spaces", "smooth_terms", "np"]
