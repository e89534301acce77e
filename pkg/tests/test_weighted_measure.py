import math

import numpy as np
import pytest

from hyperfill import radial_weight as rw
from hyperfill.errors import InvalidParameter
from hyperfill.uniform_geometry import enumerate_rays, graph_height
from hyperfill.weighted_measure import (
    MASS_NORMALIZED,
    edge_comparability,
    edge_measure,
    integrate_along_ray,
    integrate_over_filling,
    integrate_radial,
    integrate_radial_by_level,
    lemma28_ratio,
    lemma28_upper,
    level_edge_masses,
    level_mass_sums,
    total_mass,
    vertex_density,
)


@pytest.fixture(scope="module")
def filling3(cantor_fillings):
    return cantor_fillings[3.0]


@pytest.fixture(scope="module")
def rho3():
    return rw.bbs(0.5, 2.0, 3.0)


def test_edge_measures_add_up(filling3, rho3):
    total = math.fsum(edge_measure(filling3, rho3, eid) for eid in range(len(filling3.edges)))
    assert integrate_radial(filling3, rho3) == pytest.approx(total, rel=1e-10)
    assert sum(integrate_radial_by_level(filling3, rho3)) == pytest.approx(total, rel=1e-10)


def test_pointwise_and_radial_integrals_agree(filling3, rho3):
    phi = lambda h: math.exp(-h) * (1.0 + h)
    pointwise = integrate_over_filling(filling3, rho3, lambda x: phi(graph_height(filling3, x)), N=4)
    assert pointwise == pytest.approx(integrate_radial(filling3, rho3, phi, N=4), rel=1e-8)


def test_level_sums_are_consistent(filling3):
    vert, horiz = level_edge_masses(filling3, filling3.levels)
    doubled = level_mass_sums(filling3)
    for n in range(filling3.levels):
        assert vert[n] + 2.0 * horiz[n] == pytest.approx(doubled[n])


@pytest.mark.parametrize("rho", [rw.bbs(0.5, 2.0, 3.0), rw.example11(2.0, 3.0)], ids=["bbs", "example11"])
def test_total_mass_comparable_to_product(filling3, rho):
    ratios = {N: total_mass(filling3, rho, N).ratio for N in range(4, 9)}
    for N, r in ratios.items():
        assert 0.1 <= r <= 10.0, (N, r)
    assert abs(ratios[8] - ratios[6]) / ratios[6] < 0.2


def test_total_mass_level_bounds(filling3, rho3):
    with pytest.raises(InvalidParameter):
        total_mass(filling3, rho3, 0)
    with pytest.raises(InvalidParameter):
        total_mass(filling3, rho3, filling3.levels + 1)


def test_ray_lower_bound_ratio_is_stable(filling3, rho3):
    phi = lambda h: math.exp(-h)
    ratios = [lemma28_ratio(filling3, rho3, phi, 2.0, N=N).ratio for N in range(4, 9)]
    assert all(r > 0 for r in ratios)
    assert max(ratios) / min(ratios) < 2.0


def test_general_lower_bound_matches_radial_case(filling3, rho3):
    phi = lambda h: math.exp(-h)
    g = lambda x: phi(graph_height(filling3, x))
    radial = lemma28_ratio(filling3, rho3, phi, 2.0, N=3)
    general = lemma28_upper(filling3, rho3, g, 2.0, N=3)
    assert general.rhs == pytest.approx(radial.rhs, rel=1e-7)
    # mass normalization splits each edge at t = 1/2 in both versions
    assert general.lhs == pytest.approx(radial.lhs, rel=1e-7)


def test_ray_integrals(filling3, rho3):
    ray = enumerate_rays(filling3, 5, max_rays=1)[0].truncate(3)
    one = lambda x: 1.0
    plain = integrate_along_ray(filling3, ray, rho3, one)
    assert plain > 0.0
    normalized = integrate_along_ray(filling3, ray, rho3, one, mode=MASS_NORMALIZED, p=2.0)
    assert normalized >= plain
    with pytest.raises(InvalidParameter):
        integrate_along_ray(filling3, ray, rho3, one, mode="weird")


def test_edge_masses_are_comparable(filling3):
    report = edge_comparability(filling3)
    assert report.holds
    assert report.max_mass_ratio >= 1.0


def test_vertex_density(filling3, rho3):
    assert vertex_density(filling3, rho3, 0) == pytest.approx(2.0 * filling3.masses[0])
    assert np.all(filling3.masses > 0)
