import numpy as np
import pytest

from rmvsde.bangbang import (
    alternating_policy,
    benchmark_config,
    benchmark_model,
    half_mix_policy,
    predicted_alternating_cost,
)
from rmvsde.controls import (
    ActionSet,
    OpenLoopPolicy,
    RelaxedControlPolicy,
    as_relaxed,
    chattering_approximation,
    uniform_grid,
)
from rmvsde.cost import CostSet, check_cost_growth_bound, evaluate_relaxed, evaluate_strict
from rmvsde.dynamics import CoefficientSet, SimulationConfig


def constant_policy(aset, value, horizon=1.0):
    return OpenLoopPolicy(aset, np.array([0.0, horizon]), np.array([value]))


def test_total_reflection_cost_is_exact():
    aset = ActionSet(points=np.array([0.0]))
    coeffs = CoefficientSet(b=lambda t, x, m1, m2, a: -1.0, sigma=lambda t, x, m1, m2: 0.0)
    costs = CostSet(
        f=lambda t, x, m1, m2, a: 0.0,
        c=lambda t, x, m1, m2: 1.0,
        g=lambda x, m1, m2: 0.0,
    )
    config = SimulationConfig(horizon=1.0, steps=128, particles=4, seed=0, initial=0.0)
    est = evaluate_strict(costs, coeffs, constant_policy(aset, 0.0), config, aset)
    assert est.value == 1.0
    assert est.reflection == 1.0
    assert est.stderr == 0.0


def test_unit_running_cost_integrates_to_horizon():
    aset = ActionSet(points=np.array([0.0]))
    coeffs = CoefficientSet(b=lambda t, x, m1, m2, a: 0.0, sigma=lambda t, x, m1, m2: 0.0)
    costs = CostSet(
        f=lambda t, x, m1, m2, a: 1.0,
        c=lambda t, x, m1, m2: 0.0,
        g=lambda x, m1, m2: 0.0,
    )
    config = SimulationConfig(horizon=2.0, steps=128, particles=2, seed=0, initial=1.0)
    est = evaluate_strict(costs, coeffs, constant_policy(aset, 0.0, 2.0), config, aset)
    assert est.value == 2.0


def test_alternating_benchmark_matches_closed_form():
    action_set, coeffs, costs = benchmark_model(1.0)
    for n in (1, 2, 4):
        policy = alternating_policy(n, 1.0, action_set)
        est = evaluate_strict(
            costs, coeffs, policy, benchmark_config(1.0, steps=100 * n), action_set
        )
        assert est.value == pytest.approx(predicted_alternating_cost(n, 1.0), abs=1e-4)


def test_relaxed_half_mix_benchmark_is_free():
    action_set, coeffs, costs = benchmark_model(1.0)
    q = half_mix_policy(action_set, 1.0)
    est = evaluate_relaxed(costs, coeffs, q, benchmark_config(1.0, steps=200), action_set)
    assert est.value == 0.0
    assert est.stderr == 0.0


def test_dirac_relaxed_cost_equals_strict_bitwise():
    aset = ActionSet(points=np.array([-1.0, 0.5, 2.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - 0.5 * x + 0.2 * m1,
        sigma=lambda t, x, m1, m2: 0.3,
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x + np.asarray(a) * np.asarray(a),
        c=lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x),
        g=lambda x, m1, m2: x + m1,
    )
    config = SimulationConfig(horizon=1.0, steps=100, particles=24, seed=17, initial=0.5)
    strict = constant_policy(aset, 0.5)
    es = evaluate_strict(costs, coeffs, strict, config, aset)
    er = evaluate_relaxed(costs, coeffs, as_relaxed(strict), config, aset)
    assert es == er
    assert es.value == es.running + es.reflection + es.terminal


def test_mixture_of_constant_rates_is_exact():
    aset = ActionSet(points=np.array([0.0, 2.0]))
    coeffs = CoefficientSet(b=lambda t, x, m1, m2, a: 0.0, sigma=lambda t, x, m1, m2: 0.0)
    costs = CostSet(
        f=lambda t, x, m1, m2, a: a,
        c=lambda t, x, m1, m2: 0.0,
        g=lambda x, m1, m2: 0.0,
    )
    q = RelaxedControlPolicy(aset, np.array([0.0, 1.0]), np.array([[0.5, 0.5]]))
    config = SimulationConfig(horizon=1.0, steps=128, particles=3, seed=1, initial=1.0)
    est = evaluate_relaxed(costs, coeffs, q, config, aset)
    assert est.running == 1.0
    assert est.value == 1.0


def _linearity_fixture():
    aset = ActionSet(points=np.array([0.0, 1.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - x, sigma=lambda t, x, m1, m2: 0.4
    )
    config = SimulationConfig(horizon=1.0, steps=60, particles=16, seed=5, initial=0.2)
    policy = constant_policy(aset, 1.0)

    def costs_with(f=None, c=None, g=None):
        return CostSet(
            f=f or (lambda t, x, m1, m2, a: x * x + a),
            c=c or (lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x)),
            g=g or (lambda x, m1, m2: x),
        )

    return aset, coeffs, config, policy, costs_with


def test_cost_scales_exactly_by_powers_of_two():
    aset, coeffs, config, policy, costs_with = _linearity_fixture()
    base = evaluate_strict(costs_with(), coeffs, policy, config, aset)
    doubled_f = evaluate_strict(
        costs_with(f=lambda t, x, m1, m2, a: 2.0 * (x * x + a)),
        coeffs, policy, config, aset,
    )
    assert doubled_f.running == 2.0 * base.running
    assert doubled_f.reflection == base.reflection
    doubled_c = evaluate_strict(
        costs_with(c=lambda t, x, m1, m2: 2.0 + 0.0 * np.asarray(x)),
        coeffs, policy, config, aset,
    )
    assert doubled_c.reflection == 2.0 * base.reflection
    doubled_g = evaluate_strict(
        costs_with(g=lambda x, m1, m2: 2.0 * x), coeffs, policy, config, aset
    )
    assert doubled_g.terminal == 2.0 * base.terminal


def test_cost_is_additive_in_the_integrands():
    aset, coeffs, config, policy, costs_with = _linearity_fixture()
    f1 = lambda t, x, m1, m2, a: x * x
    f2 = lambda t, x, m1, m2, a: np.asarray(a) + 0.0 * np.asarray(x)
    j1 = evaluate_strict(costs_with(f=f1), coeffs, policy, config, aset).running
    j2 = evaluate_strict(costs_with(f=f2), coeffs, policy, config, aset).running
    j12 = evaluate_strict(
        costs_with(f=lambda t, x, m1, m2, a: f1(t, x, m1, m2, a) + f2(t, x, m1, m2, a)),
        coeffs, policy, config, aset,
    ).running
    assert j12 == pytest.approx(j1 + j2, rel=1e-12)


def _chatter_model(seed):
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - 0.5 * x + 0.2 * m1,
        sigma=lambda t, x, m1, m2: 0.3,
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x + 0.5 * np.asarray(a) ** 2
        + 0.1 * np.asarray(a) * np.asarray(x),
        c=lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x),
        g=lambda x, m1, m2: 2.0 * x,
    )
    q = RelaxedControlPolicy(
        aset, uniform_grid(1.0, 2), np.array([[0.3, 0.2, 0.5], [0.6, 0.0, 0.4]])
    )
    config = SimulationConfig(horizon=1.0, steps=320, particles=200, seed=seed, initial=0.4)
    return aset, coeffs, costs, q, config


def test_chattering_cost_converges_to_relaxed_cost():
    for seed in (101, 202, 303):
        aset, coeffs, costs, q, config = _chatter_model(seed)
        relaxed = evaluate_relaxed(costs, coeffs, q, config, aset).value
        gap = {}
        for n in (2, 32):
            u = chattering_approximation(q, n)
            gap[n] = abs(evaluate_strict(costs, coeffs, u, config, aset).value - relaxed)
        assert gap[32] < 0.5 * gap[2]


def test_feedback_policy_cost_matches_equivalent_open_loop():
    from rmvsde.controls import FeedbackPolicy

    aset = ActionSet(points=np.array([-1.0, 0.5, 2.0]))
    coeffs = CoefficientSet(
        b=lambda t, x, m1, m2, a: a - x, sigma=lambda t, x, m1, m2: 0.2
    )
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x + np.asarray(a) ** 2,
        c=lambda t, x, m1, m2: 1.0 + 0.0 * np.asarray(x),
        g=lambda x, m1, m2: x,
    )
    config = SimulationConfig(horizon=1.0, steps=80, particles=12, seed=8, initial=0.3)
    feedback = FeedbackPolicy(aset, lambda t, x, m1, m2: 0.5 + 0.0 * np.asarray(x))
    open_loop = constant_policy(aset, 0.5)
    ef = evaluate_strict(costs, coeffs, feedback, config, aset)
    eo = evaluate_strict(costs, coeffs, open_loop, config, aset)
    assert ef.value == eo.value
    assert ef == eo


def test_stderr_vanishes_for_deterministic_identical_particles():
    aset = ActionSet(points=np.array([0.5]))
    coeffs = CoefficientSet(b=lambda t, x, m1, m2, a: a - x, sigma=lambda t, x, m1, m2: 0.0)
    costs = CostSet(
        f=lambda t, x, m1, m2, a: x * x,
        c=lambda t, x, m1, m2: 0.0,
        g=lambda x, m1, m2: x,
    )
    config = SimulationConfig(horizon=1.0, steps=50, particles=16, seed=3, initial=1.0)
    est = evaluate_strict(costs, coeffs, constant_policy(aset, 0.5), config, aset)
    assert est.stderr == 0.0


def test_cost_growth_probe():
    aset = ActionSet(points=np.array([0.0, 1.0]))
    good = CostSet(
        f=lambda t, x, m1, m2, a: x * x + a,
        c=lambda t, x, m1, m2: 1.0,
        g=lambda x, m1, m2: x,
        declared_growth_c3=6.0,
    )
    ok, witness = check_cost_growth_bound(good, aset, 1.0)
    assert ok and witness is None
    bogus = CostSet(
        f=lambda t, x, m1, m2, a: np.exp(np.asarray(x)),
        c=lambda t, x, m1, m2: 0.0,
        g=lambda x, m1, m2: 0.0,
        declared_growth_c3=1.0,
    )
    ok, witness = check_cost_growth_bound(bogus, aset, 1.0)
    assert not ok and witness is not None
