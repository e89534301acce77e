import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfill import radial_weight as rw
from hyperfill.errors import InvalidParameter, ParseError, RegimeMismatch
from hyperfill.status_model import TraceStatus
from hyperfill.trace_lab import (
    build_divergent,
    build_example11,
    build_oscillator_calR,
    build_oscillator_p1,
    build_oscillator_pg1,
    check_upper_gradient,
    classify_samples,
    constant_function,
    default_smooth,
    level_set_intervals,
    majorant,
    profile_table,
    smooth_exponential,
    sobolev_norms,
    tent_peaks,
    trace_along_ray,
    trace_lp_bound,
    trace_on_edge_union,
    trace_T,
    trace_tilde,
)
from hyperfill.trace_lab.radial import LogWeightGrid, ds_mass, profile_energy, random_smooth
from hyperfill.uniform_geometry import enumerate_rays

from conftest import smooth_terms


class CenterCoordinate:
    """Coordinate of the higher endpoint's center: not radial, but continuous up to the boundary."""

    radial = False

    def _coord(self, filling, vid):
        return float(filling.space.coordinates[filling.center(vid), 0])

    def value_at(self, filling, x):
        return self._coord(filling, filling.edges[x.edge].b)

    def vertex_value(self, filling, vid):
        return self._coord(filling, vid)


# ---------------------------------------------------------------------------
# Detector
# ---------------------------------------------------------------------------

def test_classify_constant_samples():
    r = classify_samples(range(20), [0.25] * 20)
    assert r.status is TraceStatus.CONVERGED
    assert r.value == 0.25


def test_classify_logarithmic_growth():
    hs = np.arange(41.0)
    r = classify_samples(hs, np.log1p(hs))
    assert r.status is TraceStatus.DIVERGED
    assert r.sign == 1
    r = classify_samples(hs, -np.log1p(hs))
    assert r.sign == -1


def test_classify_alternating_samples():
    hs = np.arange(0.0, 20.0, 0.5)
    r = classify_samples(hs, [float(i % 2) for i in range(hs.size)])
    assert r.status is TraceStatus.OSCILLATING
    assert r.limsup - r.liminf == 1.0


def test_classify_settling_samples_is_undetermined():
    hs = np.arange(20.0)
    # monotone, decelerating: second half of the window moves much less than the first
    r = classify_samples(hs, 1.0 - 0.2 * np.exp(-(hs - 15.0)))
    assert r.status is TraceStatus.UNDETERMINED
    r = classify_samples(hs, 5e-4 * (hs % 2))
    assert r.status is TraceStatus.UNDETERMINED


# ---------------------------------------------------------------------------
# Radial functions
# ---------------------------------------------------------------------------

def test_smooth_profile_rates():
    slow = smooth_exponential(1.0, [(-1.0, 1.0)], 2.0)
    assert slow.U(1.0) == pytest.approx(1.0 - math.exp(-1.0))
    assert slow.q(1.0) == pytest.approx(math.exp(-1.0) * 2.0)
    assert default_smooth(2.0).params["terms"] == [[-1.0, 1.0]]
    for bad in (0.0, -0.5):
        with pytest.raises(InvalidParameter):
            smooth_exponential(0.0, [(1.0, bad)], 2.0)
    u = default_smooth(2.0, rate=2.0)
    assert u.U(0.0) == 0.0
    assert u.q(1.0) == pytest.approx(2.0 * math.exp(-2.0) * 2.0)


def test_profile_table():
    u = profile_table([0.0, 1.0, 2.0], [0.0, 1.0, 1.0], alpha=2.0)
    assert u.U(0.5) == 0.5
    assert u.U(7.0) == 1.0
    assert u.q(0.5) == pytest.approx(math.sqrt(2.0))
    assert u.q(1.5) == 0.0
    with pytest.raises(ParseError):
        profile_table([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ParseError):
        profile_table([0.5, 1.0], [0.0, 1.0], alpha=2.0)
    with_density = profile_table([0.0, 1.0], [0.0, 1.0], [2.0, 2.0])
    assert with_density.q(0.3) == pytest.approx(2.0)


def test_log_weight_grid_matches_closed_form():
    grid = LogWeightGrid(lambda t: np.asarray(t, dtype=float), 0.0, 30.0)
    for a, b in ((0.0, 1.0), (0.013, 7.77), (12.5, 30.0)):
        assert grid.log_integral(a, b) == pytest.approx(math.log(math.exp(b) - math.exp(a)), rel=1e-12)
    assert grid.log_integral_from_start(20.0) == pytest.approx(math.log(math.expm1(20.0)), rel=1e-12)


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 2.0])
def test_example11_tents(p):
    ex = build_example11(p, 2.0, cells=12)
    eps = math.log(2.0)
    for n in range(12):
        assert ex.u.U(float(n)) == 0.0
        assert ds_mass(ex.u, eps, n, n + 1.0) == pytest.approx(2.0, rel=1e-8)
        assert profile_energy(ex.u, ex.rho, p, n, n + 1.0) <= 2.0 ** p * math.exp(-n * n) * (1.0 + 1e-6)
    assert [round(ex.u.U(t), 12) for t in tent_peaks(ex.u)] == [1.0] * 12


def test_divergent_function_for_critical_weight():
    rho = rw.critical(2.0, 2.0)
    u = build_divergent(rho, 2.0)
    assert u.U(40.0) > u.U(20.0) > u.U(10.0)
    assert u.U(40.0) >= u.U(10.0) + 0.5
    assert u.U(10.0) == pytest.approx(math.log(11.0), rel=1e-9)
    ratio = profile_energy(u, rho, 2.0, 0.0, 80.0) / profile_energy(u, rho, 2.0, 0.0, 40.0)
    assert ratio < 1.1


def test_divergent_needs_infinite_R():
    with pytest.raises(RegimeMismatch):
        build_divergent(rw.bbs(0.5, 2.0, 2.0), 2.0)


def test_divergent_for_p_equal_one_climbs_by_steps():
    u = build_divergent(rw.example11(1.0, 2.0), 1.0, t_max=20.0)
    ends = sorted(u.landmarks)
    assert u.U(ends[-1]) >= 3.0
    assert u.U(0.0) == 0.0


def test_level_sets_of_example11():
    rho = rw.example11(1.0, 2.0)
    found = level_set_intervals(rho, math.log(2.0), 10.0)
    assert [k for _, _, k in found] == list(range(1, len(found) + 1))
    for a, b, k in found:
        assert b - a <= 1.0
        assert a * a >= k * math.log(2.0) - 1e-3


def test_oscillator_p1():
    rho = rw.example11(1.0, 2.0)
    u = build_oscillator_p1(rho, t_max=20.0)
    eps = math.log(2.0)
    cells = list(zip(u.breakpoints[0::2], u.breakpoints[1::2]))
    assert len(tent_peaks(u)) == u.params["cells"] >= 3
    for (a, b), k in zip(cells, u.params["levels"]):
        assert ds_mass(u, eps, a, b) == pytest.approx(2.0, rel=1e-6)
        assert profile_energy(u, rho, 1.0, a, b) <= 2.0 ** (1 - k) * (1.0 + 1e-6)


def test_oscillator_pg1():
    rho = rw.example11(2.0, 2.0)
    u = build_oscillator_pg1(rho, 2.0, t_max=12.0, max_cells=8)
    bounds = u.params["energy_bounds"]
    starts = [t for t in u.breakpoints]
    for (a, b), bound in zip(zip(starts, starts[1:]), bounds):
        assert profile_energy(u, rho, 2.0, a, b) == pytest.approx(bound, rel=1e-6)
    with pytest.raises(RegimeMismatch):
        build_oscillator_pg1(rw.constant(1.0), 2.0, alpha=2.0)


def test_oscillator_calR():
    rho = rw.exploding(2.0, 2.0)
    u = build_oscillator_calR(rho, 2.0, max_cells=40, max_tents=5)
    assert len(tent_peaks(u)) >= 3
    assert len(u.params["energy_bounds"]) == u.params["cells"] == 5
    with pytest.raises(RegimeMismatch):
        build_oscillator_calR(rw.spike_gap(2.0, 2.0), 2.0, max_cells=40)


# ---------------------------------------------------------------------------
# Traces on the filling
# ---------------------------------------------------------------------------

def test_smooth_function_has_a_trace(deep_filling):
    u = default_smooth(2.0, rate=2.0)
    for xi in (0, 5, 15):
        v = trace_T(u, deep_filling, xi)
        assert v.converged and v.ray_independent
        assert v.value == pytest.approx(1.0, abs=1e-6)
        assert trace_on_edge_union(u, deep_filling, xi).value == pytest.approx(v.value, abs=1e-4)


def test_unit_rate_profile_converges_on_a_tall_filling(tall_filling):
    u = default_smooth(2.0)
    ray = enumerate_rays(tall_filling, 1, max_rays=1)[0]
    assert ray.depth == 40
    r = trace_along_ray(u, ray, tall_filling, tol=1e-4)
    assert r.status is TraceStatus.CONVERGED
    assert r.value == pytest.approx(1.0, abs=1e-12)
    tilde = trace_tilde(u, tall_filling, 1, tol=1e-4)
    assert tilde.verdict.converged and tilde.verdict.value == pytest.approx(1.0, abs=1e-12)


def test_unit_rate_profile_is_unsettled_on_a_shallow_filling(deep_filling):
    r = trace_along_ray(default_smooth(2.0), enumerate_rays(deep_filling, 0, max_rays=1)[0], deep_filling)
    assert r.status is not TraceStatus.CONVERGED


def test_trace_at_a_chosen_depth(deep_filling):
    u = default_smooth(2.0, rate=2.0)
    v = trace_T(u, deep_filling, 4, depth=12)
    assert v.depth == 12
    assert max(v.rays[0].heights) == 12
    for bad in (0, deep_filling.levels + 1):
        with pytest.raises(InvalidParameter):
            trace_T(u, deep_filling, 4, depth=bad)


def test_constant_function_trace(deep_filling):
    v = trace_T(constant_function(0.3), deep_filling, 2)
    assert v.value == 0.3


def test_example11_oscillates_but_averages_vanish(deep_filling):
    ex = build_example11(2.0, 2.0)
    assert deep_filling.levels >= 12
    for xi in range(0, deep_filling.space.size, 3):
        v = trace_T(ex.u, deep_filling, xi)
        assert v.status is TraceStatus.OSCILLATING
        assert v.band >= 0.9
        tilde = trace_tilde(ex.u, deep_filling, xi)
        assert tilde.averages == [0.0] * (deep_filling.levels + 1)
        assert tilde.verdict.converged and tilde.verdict.value == 0.0


def test_example11_energy_per_level(deep_filling):
    ex = build_example11(2.0, 2.0)
    norms = sobolev_norms(deep_filling, ex.rho, ex.u, 2.0)
    for n, e in enumerate(norms.profile_energy):
        assert e <= 4.0 * math.exp(-n * n) * (1.0 + 1e-6)
    assert math.isfinite(norms.N_norm)


def test_random_smooth_functions_agree_with_averages(deep_filling):
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = random_smooth(rng, 2.0)
        xi = int(rng.integers(deep_filling.space.size))
        v = trace_T(u, deep_filling, xi)
        tilde = trace_tilde(u, deep_filling, xi)
        assert v.converged and tilde.verdict.converged
        assert abs(tilde.verdict.value - v.value) <= 1e-3


def test_divergent_trace_on_filling(deep_filling):
    rho = rw.critical(2.0, 2.0)
    u = build_divergent(rho, 2.0)
    v = trace_T(u, deep_filling, 0)
    assert v.status is TraceStatus.DIVERGED and v.sign == 1
    assert math.isfinite(sobolev_norms(deep_filling, rho, u, 2.0).dotN_norm)


def test_non_radial_function_uses_interleavings(deep_filling):
    u = CenterCoordinate()
    xi = 9
    rays = enumerate_rays(deep_filling, xi, max_rays=4)
    v = trace_T(u, deep_filling, xi, max_rays=4)
    pairs = len(rays) * (len(rays) - 1)
    assert len(v.rays) == len(rays) + min(pairs, 4)
    assert v.converged and v.ray_independent
    assert v.value == pytest.approx(float(deep_filling.space.coordinates[xi, 0]))


def test_short_ray_is_rejected(deep_filling):
    ray = enumerate_rays(deep_filling, 0, max_rays=1)[0].truncate(3)
    with pytest.raises(InvalidParameter):
        trace_along_ray(default_smooth(2.0, rate=2.0), ray, deep_filling)


def test_trace_is_dominated_by_the_majorant(deep_filling):
    rho = rw.bbs(0.5, 2.0, 2.0)
    u = default_smooth(2.0, rate=2.0)
    star = majorant(u, deep_filling)
    assert star == pytest.approx(1.0 - math.exp(-28.0), abs=1e-8)
    bound = trace_lp_bound(deep_filling, rho, u, 2.0)
    assert bound.converged == bound.points
    assert bound.trace_norm <= bound.majorant_norm + 1e-8


@pytest.mark.parametrize("build", [lambda: default_smooth(2.0, rate=2.0), lambda: build_example11(2.0, 2.0).u],
                         ids=["smooth", "example11"])
def test_upper_gradient_inequality(deep_filling, build):
    report = check_upper_gradient(build(), deep_filling, paths=40, seed=3)
    assert report.holds, report.worst


@settings(deadline=None, max_examples=20)
@given(c=st.floats(-1.0, 1.0), terms=smooth_terms(), xi=st.integers(0, 15))
def test_smooth_traces_reach_the_constant_term(deep_filling, c, terms, xi):
    u = smooth_exponential(c, terms, 2.0)
    v = trace_T(u, deep_filling, xi)
    assert v.converged
    assert v.value == pytest.approx(c, abs=1e-3)
