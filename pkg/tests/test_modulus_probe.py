import math

import numpy as np
import pytest

from hyperfill import radial_weight as rw
from hyperfill.errors import InvalidParameter, PreconditionFailure
from hyperfill.modulus_probe import (
    check_condition1,
    holder_bound_check,
    positive_modulus_bound,
    probe,
    random_edge_function,
    vertical_curve,
    witness_zero_modulus,
)
from hyperfill.status_model import ModulusVerdict


def test_condition_fails_at_the_dip():
    cond = check_condition1(rw.dip(2.0, 2.0, 1.0), 2.0, 0.0, 2.0)
    assert not cond.holds and math.isinf(cond.norm)
    assert check_condition1(rw.dip(2.0, 2.0, 1.0), 2.0, 1.5, 3.0).holds
    assert check_condition1(rw.bbs(0.5, 2.0, 2.0), 2.0, 0.0, 2.0).holds


def test_interval_must_be_ordered():
    with pytest.raises(InvalidParameter):
        check_condition1(rw.bbs(0.5, 2.0, 2.0), 2.0, 2.0, 1.0)


def test_shell_witness_for_p_two():
    cert = witness_zero_modulus(rw.dip(2.0, 2.0, 1.0), 2.0, 0.0, 2.0, depth=8)
    assert cert.verdict is ModulusVerdict.ZERO_WITNESS
    assert len(cert.shells) >= 8
    assert cert.line_partial_sums[-1] >= 8.0
    assert cert.energy_partial_sums[-1] < 1.0
    assert cert.diagnostics["center"] == pytest.approx(1.0)
    # shells are nested around the center, moving inwards
    outer = [s[3] - s[0] for s in cert.shells]
    assert outer == sorted(outer, reverse=True)


def test_level_set_witness_for_p_one():
    cert = witness_zero_modulus(rw.dip(1.0, 2.0, 1.0), 1.0, 0.0, 2.0, depth=8)
    assert cert.diagnostics["kind"] == "level sets"
    assert cert.diagnostics["levels"] == list(range(1, 9))
    assert cert.line_partial_sums[-1] >= 8.0
    assert cert.energy_partial_sums[-1] < 1.0
    increments = np.diff([0.0] + cert.energy_partial_sums)
    for k, e in enumerate(increments, start=1):
        assert e <= 2.0 ** -k * (1.0 + 1e-9)


def test_no_witness_where_the_condition_holds():
    with pytest.raises(PreconditionFailure):
        witness_zero_modulus(rw.bbs(0.5, 2.0, 2.0), 2.0, 0.0, 2.0)


def test_holder_ratio_is_scale_invariant(deep_filling):
    rho = rw.bbs(0.5, 2.0, 2.0)
    curve = vertical_curve(deep_filling, 0, 0, 3)
    phi, pts = random_edge_function(np.random.default_rng(1))
    one = holder_bound_check(deep_filling, rho, 2.0, curve, phi, phi_points=pts)
    two = holder_bound_check(deep_filling, rho, 2.0, curve, lambda x: 2.0 * phi(x), phi_points=pts)
    assert one.holds
    assert two.ratio == pytest.approx(one.ratio, rel=1e-9)
    assert one.empirical <= one.constant * (1.0 + 1e-8)


def test_holder_bound_for_constant_density(deep_filling):
    rho = rw.bbs(0.5, 2.0, 2.0)
    curve = vertical_curve(deep_filling, 3, 1, 4)
    check = holder_bound_check(deep_filling, rho, 2.0, curve, lambda x: 1.0)
    assert check.holds
    assert 0.0 < check.ball_mass_floor <= 1.0


def test_curve_must_be_connected(deep_filling):
    rho = rw.bbs(0.5, 2.0, 2.0)
    far = len(deep_filling.edges) - 1
    with pytest.raises(InvalidParameter):
        holder_bound_check(deep_filling, rho, 2.0, [0, far], lambda x: 1.0)
    with pytest.raises(InvalidParameter):
        holder_bound_check(deep_filling, rho, 2.0, [], lambda x: 1.0)


def test_positive_bound_from_random_trials(deep_filling):
    rho = rw.bbs(0.5, 2.0, 2.0)
    curve = vertical_curve(deep_filling, 0, 0, 2)
    cert = positive_modulus_bound(deep_filling, rho, 2.0, curve, trials=100, seed=0)
    assert cert.verdict is ModulusVerdict.POSITIVE_BOUND
    assert cert.diagnostics["violations"] == 0
    assert cert.diagnostics["max_ratio"] <= 1.0 + 1e-8
    assert cert.bound == pytest.approx(cert.diagnostics["constant"] ** -2.0)
    assert cert.bound > 0.0


def test_probe_picks_the_side_of_the_dichotomy(deep_filling):
    dip = probe(rw.dip(2.0, 2.0, 1.0), 2.0, 0.0, 2.0)
    assert dip.verdict is ModulusVerdict.ZERO_WITNESS
    plain = probe(rw.bbs(0.5, 2.0, 2.0), 2.0, 0.0, 2.0)
    assert plain.verdict is ModulusVerdict.POSITIVE_BOUND and plain.bound is None
    full = probe(rw.bbs(0.5, 2.0, 2.0), 2.0, 0.0, 2.0, filling=deep_filling, trials=10)
    assert full.bound > 0.0
    assert full.diagnostics["local_norm"] > 0.0


def test_vertical_curve_bounds(deep_filling):
    with pytest.raises(InvalidParameter):
        vertical_curve(deep_filling, 0, 3, 3)
    assert len(vertical_curve(deep_filling, 0, 0, 5)) == 5
