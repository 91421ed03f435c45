import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gritquit.boundary import DomainError
from gritquit.maxima import (
    MaxLaw,
    endpoint_density,
    hitting_probability,
    norm_cdf,
    running_max_cdf,
    running_max_conditional_density,
    running_max_density,
    running_max_joint_density,
    simulate_gamblers_ruin,
    simulate_running_max,
    viability_formula,
    viability_probability,
)
from gritquit.model import gamma_roots

LAW = MaxLaw(1.0, 1.0, 1.0)


def test_cdf_zero_at_origin():
    for mu in (-2.0, 0.0, 0.3, 1.0, 5.0):
        assert running_max_cdf(MaxLaw(mu, 1.3, 0.7), 0.0) == 0.0


def test_cdf_driftless_reflection_law():
    law = MaxLaw(0.0, 1.5, 2.0)
    m = np.linspace(0, 8, 200)
    np.testing.assert_allclose(running_max_cdf(law, m), 2 * norm_cdf(m / law.scale) - 1, atol=1e-15)


@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(0.05, 5))
def test_cdf_monotone_to_one(mu, sigma, t):
    law = MaxLaw(mu, sigma, t)
    m = np.linspace(0, abs(mu) * t + 12 * law.scale, 1000)
    c = running_max_cdf(law, m)
    assert np.all(np.diff(c) >= 0) and np.all((c >= 0) & (c <= 1))
    assert c[-1] == pytest.approx(1.0, abs=1e-12)


def test_cdf_large_drift_no_overflow():
    law = MaxLaw(50.0, 0.5, 1.0)
    c = running_max_cdf(law, np.array([10.0, 40.0, 49.0, 60.0]))
    assert np.all(np.isfinite(c)) and c[-1] == pytest.approx(1.0)


def test_density_is_cdf_derivative():
    a = np.linspace(0.05, 4, 60)
    h = 1e-5
    fd = (running_max_cdf(LAW, a + h) - running_max_cdf(LAW, a - h)) / (2 * h)
    np.testing.assert_allclose(running_max_density(LAW, a), fd, atol=1e-6)


def test_joint_density_mass():
    span = 14.0
    mass, _ = integrate.dblquad(lambda b, a: float(running_max_joint_density(LAW, a, b)), 0, span,
                                lambda a: -span, lambda a: a - 1e-300, epsabs=1e-12, epsrel=1e-10)
    assert mass == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 2.0, 3.5])
def test_joint_marginal_matches_density(a):
    v, _ = integrate.quad(lambda b: float(running_max_joint_density(LAW, a, b)), -14, a - 1e-300,
                          epsabs=1e-13, epsrel=1e-12)
    assert abs(v - float(running_max_density(LAW, a))) < 1e-8


def test_joint_driftless_form():
    law = MaxLaw(0.0, 1.2, 0.8)
    a, b = 1.1, -0.4
    u = 2 * a - b
    s2t = law.sigma**2 * law.t
    expected = u / s2t * 2 / math.sqrt(2 * math.pi * s2t) * math.exp(-u * u / (2 * s2t))
    assert float(running_max_joint_density(law, a, b)) == pytest.approx(expected, rel=1e-14)


def test_conditional_form():
    a = np.array([0.3, 1.0, 2.0, 1.5])
    b = np.array([-0.5, 0.2, 1.9, -2.0])
    ratio = running_max_joint_density(LAW, a, b) / endpoint_density(LAW, b)
    np.testing.assert_allclose(ratio, running_max_conditional_density(LAW, a, b), rtol=1e-8)


def test_joint_domain_error():
    with pytest.raises(DomainError):
        running_max_joint_density(LAW, 0.5, 0.7)
    with pytest.raises(DomainError):
        running_max_joint_density(LAW, -0.1, -1.0)


def test_viability_degenerate(bench):
    p, _, b, _ = bench
    assert b.m0 == 0 and viability_probability(b, p) == 1.0
    assert viability_formula(1.0, 1.0, -0.5, -0.5) == 1.0


def test_viability_matches_gamblers_ruin_formula(staged):
    p, _, b, _ = staged
    v = viability_probability(b, p)
    assert 0 < v < 1
    assert v == pytest.approx(viability_formula(p.mu, p.sigma, b.z0, b.z_at_m0()), rel=1e-10)


def test_viability_exponent_from_roots(staged):
    p, _, b, _ = staged
    g = gamma_roots(p)
    k = -g.total  # = 2 mu / sigma^2
    direct = math.expm1(k * b.z0) / math.expm1(k * b.z_at_m0())
    assert direct == pytest.approx(viability_probability(b, p), rel=1e-12)


def test_hand_instance_value():
    # hitting +1 before -1 from 0 with unit drift: 1 / (1 + e^{-2})
    v = viability_formula(1.0, 1.0, -1.0, -2.0)
    assert v == pytest.approx(1 / (1 + math.exp(-2)), rel=1e-14)
    assert v == pytest.approx(hitting_probability(1.0, 1.0, -1.0, 1.0), rel=1e-14)


@given(st.floats(0.05, 3), st.floats(0.3, 2), st.floats(0.1, 5), st.floats(-3, -0.01), st.floats(0.01, 3))
def test_viability_rescaling_invariance(mu, sigma, k, z0, m0):
    a = viability_formula(mu, sigma, z0, z0 - m0)
    b = viability_formula(k * mu, math.sqrt(k) * sigma, z0, z0 - m0)
    assert a == pytest.approx(b, rel=1e-10)
    assert 0 < a <= 1


def test_gamblers_ruin_oracle():
    p = hitting_probability(1.0, 1.0, -1.0, 1.0)
    p_hat, se, undecided = simulate_gamblers_ruin(1.0, 1.0, -1.0, 1.0, 20_000, 1e-3, seed=7)
    assert undecided == 0
    assert abs(p_hat - p) <= 3 * se + math.sqrt(1e-3)


def test_running_max_mc_small():
    x = simulate_running_max(LAW, 1000, 1e-4, seed=3)
    p = float(running_max_cdf(LAW, 1.0))
    p_hat = float(np.mean(x <= 1.0))
    assert abs(p_hat - p) <= 3 * math.sqrt(p * (1 - p) / 1000) + 0.01
