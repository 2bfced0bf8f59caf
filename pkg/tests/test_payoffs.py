import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmflearn.payoffs import (AgentProfile, DomainError, PayoffSpec, ReportPolicy,
                              apply_policy, payoff_eval, payoff_for_unit_demand, sample_load,
                              sample_reward, unit_demand, utility_eval)
from mmflearn.mmf import ValidationError
from mmflearn.rng import make_stream


def test_payoff_values():
    assert payoff_eval(PayoffSpec('tanh', 0.9, 1.0, theta=1.0), 0.0) == 0.0
    assert payoff_eval(PayoffSpec('algebraic', 0.9, 2.0, theta=1.0), 1.0) == pytest.approx(0.5)
    spec = payoff_for_unit_demand('logistic', 1.0, 0.9, 2.0)
    assert payoff_eval(spec, spec.b) == pytest.approx(0.5)
    assert spec.b == pytest.approx(0.6)


def test_unit_demand_closed_forms():
    assert unit_demand(PayoffSpec('tanh', math.tanh(1.0), 1.0, theta=2.0)) == pytest.approx(0.5)
    assert unit_demand(PayoffSpec('algebraic', 0.5, 2.0, theta=1.0)) == pytest.approx(1.0)
    assert unit_demand(PayoffSpec('logistic', 0.5, 5.0, b=3.0)) == pytest.approx(3.0)


def test_unreachable_threshold_is_a_domain_error():
    with pytest.raises(DomainError):
        unit_demand(PayoffSpec('tanh', 0.99, 1.0, theta=1.0))
    with pytest.raises(DomainError):
        # logistic with alpha below f(0)
        unit_demand(PayoffSpec('logistic', 0.1, 1.0, theta=1.0, b=-1.0))
    with pytest.raises(DomainError):
        payoff_for_unit_demand('logistic', 1.0, 0.4, 2.0)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(['tanh', 'algebraic', 'logistic']), st.floats(1e-6, 1.0),
       st.floats(0.05, 0.95), st.floats(1.05, 4.0))
def test_payoff_invariants(kind, w, alpha, factor):
    if kind == 'logistic':
        alpha = 0.5 + alpha / 2
    spec = payoff_for_unit_demand(kind, w, alpha, w * factor)
    assert abs(payoff_eval(spec, unit_demand(spec)) - alpha) <= 1e-10
    xs = np.linspace(0, spec.udmax, 1000)
    fx = payoff_eval(spec, xs)
    assert np.all(np.diff(fx) >= -1e-15)
    slope = np.abs(np.diff(fx)) / np.diff(xs)
    assert np.all(slope <= spec.lipschitz_L / spec.udmax * (1 + 1e-6))


def test_utility_is_capped_payoff():
    spec = payoff_for_unit_demand('tanh', 0.5, 0.9, 1.0)
    prof = AgentProfile(0.5, spec)
    assert utility_eval(prof, 1.0) == pytest.approx(0.9)
    assert utility_eval(prof, 0.0) == 0.0
    assert utility_eval(prof, 0.25) == pytest.approx(payoff_eval(spec, 0.25))
    assert utility_eval(prof, 0.25) < 0.9
    assert prof.utility_lipschitz == pytest.approx(spec.theta)


def test_loads():
    assert sample_load(5000, 5000, make_stream(0, 0, 0, 'load')) == 5000
    rng = make_stream(0, 0, 0, 'load')
    draws = [sample_load(5000, 15000, rng) for _ in range(100)]
    assert all(5000 <= v <= 15000 for v in draws)
    again = make_stream(0, 0, 0, 'load')
    assert [sample_load(5000, 15000, again) for _ in range(100)] == draws
    with pytest.raises(ValidationError):
        sample_load(10, 5, rng)


def test_rewards():
    spec = payoff_for_unit_demand('tanh', 1e-4, 0.9, 2e-4)
    s = sample_reward(spec, 'deterministic', 0.5, 5000)
    assert s.reward == payoff_eval(spec, 0.5 / 5000) and s.sigma == 0.0
    s = sample_reward(spec, 'bernoulli_aggregate', 1.0, 10000, make_stream(0, 0, 0, 'r'))
    assert s.sigma == pytest.approx(0.005)
    sat = PayoffSpec('tanh', 0.9, 1.0, theta=1000.0)
    assert sample_reward(sat, 'bernoulli_aggregate', 1.0, 10, make_stream(1, 0, 0, 'r')).reward == 1.0
    g = sample_reward(spec, 'gaussian', 0.5, 5000, make_stream(0, 0, 0, 'r'), sigma_cfg=0.2)
    assert 0.0 <= g.reward <= 1.0 and g.sigma == 0.2


def test_bernoulli_mean_within_three_sigma():
    spec = payoff_for_unit_demand('tanh', 1e-4, 0.9, 2e-4)
    v, a = 100.0, 100.0 * 0.5e-4
    rng = np.random.default_rng(7)
    draws = np.array([sample_reward(spec, 'bernoulli_aggregate', a, v, rng).reward
                      for _ in range(100000)])
    f = payoff_eval(spec, a / v)
    sd = math.sqrt(f * (1 - f) / v) / math.sqrt(len(draws))
    assert abs(draws.mean() - f) <= 3 * sd


def test_policies():
    assert apply_policy(ReportPolicy(), 5000, 0.9) == (5000, 0.9)
    assert apply_policy(ReportPolicy.parse('load_scale(2)'), 5000, 0.9) == (10000, 0.9)
    assert apply_policy(ReportPolicy.parse('reward_shift(0.95)'), 5000, 0.9) == (5000, 0.0)
    assert apply_policy(ReportPolicy.parse('reward_shift(-0.2)'), 5000, 0.9) == (5000, 1.0)
    assert ReportPolicy.parse('threshold_shift(0.05)').reported_threshold(0.9) == pytest.approx(0.95)
    assert str(ReportPolicy.parse('load_scale(0.5)')) == 'load_scale(0.5)'
    with pytest.raises(ValidationError):
        ReportPolicy.parse('bribe(3)')
    with pytest.raises(ValidationError):
        ReportPolicy('random_misreport', 1.5)


def test_random_misreport_draws_and_ranges():
    pol = ReportPolicy('random_misreport', 1.0)
    rng = np.random.default_rng(3)
    for _ in range(200):
        v, x = apply_policy(pol, 1000.0, 0.5, rng)
        assert 500.0 <= v <= 2000.0 and 0.0 <= x <= 1.0
    assert apply_policy(ReportPolicy('random_misreport', 0.0), 7.0, 0.3,
                        np.random.default_rng(0)) == (7.0, 0.3)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e6), st.floats(0.0, 1.0))
def test_truthful_is_identity(v, x):
    assert apply_policy(ReportPolicy(), v, x) == (v, x)
