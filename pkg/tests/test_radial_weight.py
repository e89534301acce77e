import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperfill import radial_weight as rw
from hyperfill.errors import InvalidParameter, ParseError


def test_bbs_is_exponential():
    rho = rw.bbs(0.5, 2.0, 2.0)
    eps = math.log(2.0)
    assert rho.value(3.0) == pytest.approx(math.exp(-eps * 2.0 * 0.5 * 3.0))
    assert rho.tail == "integrable"
    assert rho.mass(0.0, math.inf) == pytest.approx(1.0 / eps)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_example11_mass_matches_quadrature(p):
    rho = rw.example11(p, 2.0)
    ref, _ = quad(lambda t: rho.value(t), 0.5, 4.0, epsabs=1e-14)
    assert rho.mass(0.5, 4.0) == pytest.approx(ref, rel=1e-9)
    assert rho.mass(0.0, math.inf) > rho.mass(0.0, 4.0)


def test_piecewise_mass_is_exact():
    rho = rw.piecewise([[0.0, 0.0, 0.0], [1.0, math.log(2.0), -1.0]])
    # 1 on [0, 1), 2 e^-(t-1) beyond
    assert rho.mass(0.0, 1.0) == pytest.approx(1.0)
    assert rho.mass(0.0, math.inf) == pytest.approx(3.0)
    assert rho.breakpoints(0.0, 5.0) == [1.0]


def test_constant_and_exp_rate_tails():
    assert rw.constant(2.0).tail == "nonintegrable"
    assert rw.exp_rate(-1.0).tail == "nonintegrable"
    assert rw.exp_rate(0.5).tail == "integrable"
    assert rw.constant(2.0).mass(0.0, 3.0) == pytest.approx(6.0)
    with pytest.raises(InvalidParameter):
        rw.constant(0.0)


def test_weight_refuses_a_different_alpha():
    rho = rw.bbs(0.5, 2.0, 2.0)
    assert rho.epsilon() == pytest.approx(math.log(2.0))
    with pytest.raises(InvalidParameter):
        rho.epsilon(3.0)
    with pytest.raises(InvalidParameter):
        rw.constant(1.0).epsilon()
    with pytest.raises(InvalidParameter):
        rw.constant(1.0).epsilon(1.0)


def test_dip_is_locally_divergent_only_at_the_center():
    rho = rw.dip(2.0, 2.0, 1.0)
    eps = math.log(2.0)
    assert rho.local_divergence(0.0, 2.0, 2.0, eps)
    assert rho.local_divergence(2.0, 3.0, 2.0, eps) is None
    assert rho.value(1.0) > 0.0


def test_spike_gap_cells_have_unit_spikes():
    rho = rw.spike_gap(2.0, 2.0, gap=1.0)
    period = 1.0 + 1.0 / math.e
    # the spike of each period carries mass 1
    assert rho.mass(1.0, period) == pytest.approx(1.0, rel=1e-12)
    assert rho.mass(0.0, 10 * period) > 10.0
    assert rho.tail == "nonintegrable"


def test_spike_gap_heights_grow_until_the_cap():
    rho = rw.spike_gap(2.0, 2.0, gap=1.0, max_exponent=3)
    start = 0.0
    for j in range(1, 6):
        spike = start + 1.0
        width = math.exp(-min(j, 3))
        assert rho.value(spike + 0.5 * width) == pytest.approx(math.exp(min(j, 3)), rel=1e-12)
        assert rho.mass(spike, spike + width) == pytest.approx(1.0, rel=1e-9)
        start = spike + width
    with pytest.raises(InvalidParameter):
        rw.spike_gap(2.0, 2.0, height=1.0)


def test_exploding_cells_have_unit_mass():
    rho = rw.exploding(2.0, 2.0)
    for k in (1, 2, 5):
        assert rho.mass(k - 1.0, float(k)) == pytest.approx(1.0, rel=1e-9)


def test_custom_weight_and_documents():
    rho = rw.custom([0.0, 1.0, 2.0], [1.0, 0.5, 0.25])
    assert rho.tail == "unknown"
    assert rho.value(0.5) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ParseError):
        rw.custom([0.0, 1.0], [1.0, 0.5], tail="maybe")
    with pytest.raises(ParseError):
        rw.custom([1.0, 2.0], [1.0, 0.5])

    again = rw.from_document(rw.bbs(0.25, 3.0, 3.0).to_document())
    assert again.family == "bbs"
    assert again.value(2.0) == pytest.approx(rw.bbs(0.25, 3.0, 3.0).value(2.0))
    with pytest.raises(ParseError):
        rw.from_document({"params": {}})


def test_rp_integrand_of_critical_weight_is_one():
    rho = rw.critical(2.0, 2.0)
    ts = np.linspace(0.0, 50.0, 11)
    assert np.allclose(rho.rp_log_integrand(ts, 2.0, math.log(2.0)), 0.0, atol=1e-12)


@settings(deadline=None, max_examples=40)
@given(
    theta=st.floats(0.05, 0.95),
    p=st.floats(1.1, 4.0),
    a=st.floats(0.0, 10.0),
    width=st.floats(0.01, 5.0),
)
def test_closed_form_mass_matches_quadrature(theta, p, a, width):
    rho = rw.bbs(theta, p, 2.0)
    ref, _ = quad(lambda t: rho.value(t), a, a + width, epsabs=1e-15, epsrel=1e-12)
    assert rho.mass(a, a + width) == pytest.approx(ref, rel=1e-8, abs=1e-15)
