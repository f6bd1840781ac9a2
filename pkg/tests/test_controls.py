import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmvsde.controls import (
    ActionSet,
    FeedbackPolicy,
    OpenLoopPolicy,
    RelaxedControlPolicy,
    as_relaxed,
    chattering_approximation,
    uniform_grid,
    weak_gap,
)
from rmvsde.errors import DomainViolation, UnsupportedPolicyForm


def midpoint_strict_integral(phi, policy, slices=4000):
    """Independent quadrature oracle for int phi(t, u_t) dt."""
    total = 0.0
    for i in range(policy.actions.size):
        lo, hi = policy.boundaries[i], policy.boundaries[i + 1]
        h = (hi - lo) / slices
        mids = lo + (np.arange(slices) + 0.5) * h
        total += float(np.sum(np.broadcast_to(phi(mids, float(policy.actions[i])), mids.shape))) * h
    return total


def midpoint_relaxed_integral(phi, q, slices=4000):
    total = 0.0
    for i in range(q.cells):
        lo, hi = q.boundaries[i], q.boundaries[i + 1]
        h = (hi - lo) / slices
        mids = lo + (np.arange(slices) + 0.5) * h
        for j, a in enumerate(q.action_set.points):
            w = q.weights[i, j]
            if w:
                total += w * float(np.sum(np.broadcast_to(phi(mids, float(a)), mids.shape))) * h
    return total


def pm_one() -> ActionSet:
    return ActionSet(points=np.array([-1.0, 1.0]), interval=(-1.0, 1.0))


def half_mix(horizon=1.0) -> RelaxedControlPolicy:
    return RelaxedControlPolicy(pm_one(), uniform_grid(horizon, 1), np.array([[0.5, 0.5]]))


def test_action_set_rejects_duplicates_and_outside_interval():
    with pytest.raises(DomainViolation):
        ActionSet(points=np.array([0.0, 0.0, 1.0]))
    with pytest.raises(DomainViolation):
        ActionSet(points=np.array([-2.0, 0.0]), interval=(-1.0, 1.0))


def test_open_loop_rejects_foreign_action():
    with pytest.raises(UnsupportedPolicyForm):
        OpenLoopPolicy(pm_one(), np.array([0.0, 1.0]), np.array([0.5]))


def test_as_relaxed_constant_is_dirac_everywhere():
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    u = OpenLoopPolicy(aset, uniform_grid(1.0, 4), np.zeros(4))
    q = as_relaxed(u)
    assert np.array_equal(q.weights, np.tile([0.0, 1.0, 0.0], (4, 1)))


def test_as_relaxed_two_cell_bang_bang():
    u = OpenLoopPolicy(pm_one(), np.array([0.0, 0.5, 1.0]), np.array([1.0, -1.0]))
    q = as_relaxed(u)
    assert np.array_equal(q.weights, [[0.0, 1.0], [1.0, 0.0]])


def test_as_relaxed_refuses_feedback():
    fb = FeedbackPolicy(pm_one(), lambda t, x, m1, m2: 1.0)
    with pytest.raises(UnsupportedPolicyForm):
        as_relaxed(fb)


def test_relaxed_rows_must_be_probabilities():
    aset = pm_one()
    with pytest.raises(DomainViolation):
        RelaxedControlPolicy(aset, np.array([0.0, 1.0]), np.array([[0.4, 0.4]]))
    with pytest.raises(DomainViolation):
        RelaxedControlPolicy(aset, np.array([0.0, 1.0]), np.array([[-0.5, 1.5]]))


def test_chattering_of_dirac_is_fixed_point():
    aset = ActionSet(points=np.array([-1.0, 0.25, 1.0]))
    q = RelaxedControlPolicy(
        aset, uniform_grid(1.0, 1), np.array([[0.0, 1.0, 0.0]])
    )
    for n in (1, 3, 8):
        u = chattering_approximation(q, n)
        assert np.all(u.actions == 0.25)


def test_chattering_quarter_three_quarters():
    aset = ActionSet(points=np.array([0.0, 1.0]))
    q = RelaxedControlPolicy(aset, np.array([0.0, 1.0]), np.array([[0.25, 0.75]]))
    u = chattering_approximation(q, 1)
    assert np.array_equal(u.boundaries, [0.0, 0.25, 1.0])
    assert np.array_equal(u.actions, [0.0, 1.0])


def test_chattering_half_mix_alternates_on_half_blocks():
    q = half_mix()
    for n in (1, 2, 4):
        u = chattering_approximation(q, n)
        assert np.array_equal(u.actions, np.tile([-1.0, 1.0], n))
        assert np.array_equal(u.boundaries, np.arange(2 * n + 1) / (2 * n))


def test_chattering_rejects_zero_level():
    with pytest.raises(DomainViolation):
        chattering_approximation(half_mix(), 0)


def test_chattering_occupation_exact_for_dyadic_weights():
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    q = RelaxedControlPolicy(
        aset, uniform_grid(1.0, 2), np.array([[0.25, 0.25, 0.5], [0.5, 0.0, 0.5]])
    )
    for n in (1, 2, 4, 8, 16, 32):
        u = chattering_approximation(q, n)
        blocks = uniform_grid(1.0, n)
        ulp = math.ulp(1.0 / n)
        for k in range(n):
            lo, hi = blocks[k], blocks[k + 1]
            length = hi - lo
            for j, a in enumerate(aset.points):
                got = 0.0
                for i in range(u.actions.size):
                    if u.actions[i] == a:
                        got += max(0.0, min(hi, u.boundaries[i + 1]) - max(lo, u.boundaries[i]))
                want = 0.0
                for c in range(q.cells):
                    ov = max(0.0, min(hi, q.boundaries[c + 1]) - max(lo, q.boundaries[c]))
                    want += ov * q.weights[c, j]
                assert abs(got - want) <= ulp


def test_chattering_occupation_generic_weights():
    gen = np.random.Generator(np.random.Philox(key=np.array([5, 0], dtype=np.uint64)))
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    for _ in range(20):
        w = gen.dirichlet(np.ones(3), size=3)
        for row in w:
            head = row[0] + row[1]
            row[2] = max(1.0 - head, 0.0)
        q = RelaxedControlPolicy(aset, uniform_grid(1.0, 3), w)
        for n in (1, 2, 5):
            u = chattering_approximation(q, n)
            blocks = uniform_grid(1.0, n)
            for k in range(n):
                lo, hi = blocks[k], blocks[k + 1]
                for j, a in enumerate(aset.points):
                    got = 0.0
                    for i in range(u.actions.size):
                        if u.actions[i] == a:
                            got += max(
                                0.0, min(hi, u.boundaries[i + 1]) - max(lo, u.boundaries[i])
                            )
                    want = 0.0
                    for c in range(q.cells):
                        ov = max(0.0, min(hi, q.boundaries[c + 1]) - max(lo, q.boundaries[c]))
                        want += ov * q.weights[c, j]
                    assert abs(got - want) <= 4.0 * math.ulp(1.0)


def test_round_trip_open_loop_through_relaxed_and_chattering():
    aset = ActionSet(points=np.array([-1.0, 0.0, 1.0]))
    actions = np.array([1.0, -1.0, 0.0, 1.0])
    u = OpenLoopPolicy(aset, uniform_grid(2.0, 4), actions)
    again = chattering_approximation(as_relaxed(u), 4)
    assert np.array_equal(again.boundaries, u.boundaries)
    assert np.array_equal(again.actions, u.actions)


def test_weak_gap_zero_for_dirac():
    aset = ActionSet(points=np.array([0.5]))
    q = RelaxedControlPolicy(aset, np.array([0.0, 1.0]), np.array([[1.0]]))
    for n in (1, 4):
        u = chattering_approximation(q, n)
        gap = weak_gap(u, q, [lambda t, a: t * a, lambda t, a: a * a])
        assert gap <= 1e-15


def test_weak_gap_needs_tests():
    q = half_mix()
    with pytest.raises(DomainViolation):
        weak_gap(chattering_approximation(q, 2), q, [])


def test_weak_gap_alternation_matches_quadrature_oracle():
    q = half_mix()
    phi_a = lambda t, a: a * np.ones_like(np.asarray(t, dtype=float))
    phi_ta = lambda t, a: t * a
    for n in (1, 2, 4, 8):
        u = chattering_approximation(q, n)
        assert weak_gap(u, q, [phi_a]) <= 1e-14
        gap = weak_gap(u, q, [phi_ta])
        oracle = abs(
            midpoint_strict_integral(phi_ta, u) - midpoint_relaxed_integral(phi_ta, q)
        )
        assert gap == pytest.approx(oracle, abs=1e-7)
        assert gap <= 1.0 / (2 * n) + 1e-12  # T^2/(2n) bound at T = 1
        assert gap == pytest.approx(1.0 / (4 * n), abs=1e-12)


def test_weak_gap_decays_along_doubling_levels():
    q = half_mix()
    tests = [
        lambda t, a: np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: a * np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: t * a,
        lambda t, a: (a * a) * np.ones_like(np.asarray(t, dtype=float)),
        lambda t, a: t * t * a,
    ]
    gaps = [weak_gap(chattering_approximation(q, n), q, tests) for n in (1, 2, 4, 8, 16, 32)]
    for lo, hi in zip(gaps[1:], gaps[:-1]):
        assert lo <= 1.05 * hi
    assert gaps[-1] < gaps[0] / 8.0


dyadic_row = st.lists(st.integers(0, 16), min_size=2, max_size=4).filter(
    lambda v: sum(v) > 0
)


@given(rows=st.lists(dyadic_row, min_size=1, max_size=5), data=st.data())
@settings(max_examples=100, deadline=None)
def test_marginal_mass_exact_for_exact_unit_rows(rows, data):
    width = max(len(r) for r in rows)
    weights = []
    for r in rows:
        r = (r + [0] * width)[:width]
        total = sum(r)
        weights.append([v / total if total else 0.0 for v in r])
        # denominators are sums of small ints: each entry is exact, row sums to 1
        head = 0.0
        for v in weights[-1][:-1]:
            head += v
        weights[-1][-1] = 1.0 - head
    aset = ActionSet(points=np.arange(width, dtype=float))
    horizon = data.draw(st.sampled_from([0.5, 1.0, 2.0, 3.0]))
    q = RelaxedControlPolicy(aset, uniform_grid(horizon, len(rows)), np.array(weights))
    for t in q.boundaries:
        assert q.time_marginal_mass(float(t)) == float(t)
