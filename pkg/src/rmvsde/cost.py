"""Monte Carlo evaluation of the control cost.

Per particle the cost is

    running    time integral of the running cost rate (trapezoidal rule in
               time, with the action/weights of each cell held at their
               cell-start value)
  + reflection Stieltjes integral of the reflection cost density against the
               increments of k (right-endpoint rule, so the complementarity
               identity is preserved bit-exactly)
  + terminal   terminal cost at the final state.

The estimate averages across particles; the reported value is the sum of the
three component means, so the breakdown always adds up exactly. The standard
error is the across-particle sample deviation of the per-particle totals
divided by sqrt(N).

Comparative studies (chattering sweeps, optimizer probes) should reuse one
seed so differences reflect the control and not the noise; the callers in
this package do that by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import ActionSet, FeedbackPolicy, OpenLoopPolicy, RelaxedControlPolicy
from .dynamics import (
    CoefficientSet,
    SimulationConfig,
    TrajectoryBundle,
    open_loop_step_actions,
    relaxed_step_weights,
    simulate_relaxed,
    simulate_strict,
)
from .errors import DomainViolation, NumericalBlowup

__all__ = [
    "CostSet", "CostEstimate",
    "evaluate_strict", "evaluate_relaxed", "check_cost_growth_bound",
]


@dataclass(frozen=True, eq=False)
class CostSet:
    """Running cost rate f(t,x,m1,m2,a), reflection cost density c(t,x,m1,m2),
    terminal cost g(x,m1,m2), with an optional declared growth constant."""

    f: object
    c: object
    g: object
    declared_growth_c3: float | None = None


@dataclass(frozen=True)
class CostEstimate:
    value: float
    stderr: float
    running: float
    reflection: float
    terminal: float


def _full(values, shape):
    values = np.asarray(values, dtype=np.float64)
    return np.broadcast_to(values, shape)


def _node_moments(bundle: TrajectoryBundle):
    m1 = np.mean(bundle.x, axis=0)
    m2 = np.mean(bundle.x * bundle.x, axis=0)
    return m1, m2


def _running_from_node_values(f_nodes_left, f_nodes_right, dt: float) -> np.ndarray:
    return dt * np.sum(0.5 * (f_nodes_left + f_nodes_right), axis=1)


def _assemble(running_pp, reflection_pp, terminal_pp) -> CostEstimate:
    for part in (running_pp, reflection_pp, terminal_pp):
        if not np.all(np.isfinite(part)):
            raise NumericalBlowup("cost evaluation produced a non-finite value")
    totals = running_pp + reflection_pp + terminal_pp
    n = totals.size
    stderr = float(np.std(totals, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    running = float(np.mean(running_pp))
    reflection = float(np.mean(reflection_pp))
    terminal = float(np.mean(terminal_pp))
    return CostEstimate(
        value=running + reflection + terminal,
        stderr=stderr,
        running=running,
        reflection=reflection,
        terminal=terminal,
    )


def _reflection_terminal(costs: CostSet, bundle: TrajectoryBundle, m1, m2):
    n, nodes = bundle.x.shape
    c_nodes = _full(
        costs.c(bundle.times[1:], bundle.x[:, 1:], m1[1:], m2[1:]), (n, nodes - 1)
    )
    reflection_pp = np.sum(c_nodes * np.diff(bundle.k, axis=1), axis=1)
    terminal_pp = _full(costs.g(bundle.x[:, -1], m1[-1], m2[-1]), (n,)).copy()
    return reflection_pp, terminal_pp


def evaluate_strict(
    costs: CostSet,
    coeffs: CoefficientSet,
    policy,
    config: SimulationConfig,
    action_set: ActionSet | None = None,
    bundle: TrajectoryBundle | None = None,
) -> CostEstimate:
    """Simulate under a strict control and estimate its cost."""
    if bundle is None:
        bundle = simulate_strict(coeffs, policy, config, action_set)
    n, nodes = bundle.x.shape
    steps = nodes - 1
    dt = config.horizon / config.steps
    m1, m2 = _node_moments(bundle)

    if isinstance(policy, OpenLoopPolicy):
        acts = open_loop_step_actions(policy, config.horizon, config.steps)
    elif isinstance(policy, FeedbackPolicy):
        acts = np.empty((n, steps))
        for s in range(steps):
            acts[:, s] = policy.action_at(
                float(bundle.times[s]), bundle.x[:, s], float(m1[s]), float(m2[s])
            )
    else:
        raise DomainViolation(f"not a strict control policy: {policy!r}")

    f_left = _full(
        costs.f(bundle.times[:-1], bundle.x[:, :-1], m1[:-1], m2[:-1], acts),
        (n, steps),
    )
    f_right = _full(
        costs.f(bundle.times[1:], bundle.x[:, 1:], m1[1:], m2[1:], acts),
        (n, steps),
    )
    running_pp = _running_from_node_values(f_left, f_right, dt)
    reflection_pp, terminal_pp = _reflection_terminal(costs, bundle, m1, m2)
    return _assemble(running_pp, reflection_pp, terminal_pp)


def evaluate_relaxed(
    costs: CostSet,
    coeffs: CoefficientSet,
    q: RelaxedControlPolicy,
    config: SimulationConfig,
    action_set: ActionSet | None = None,
    bundle: TrajectoryBundle | None = None,
) -> CostEstimate:
    """Simulate under a relaxed control and estimate its cost.

    The running cost integrates the exact finite mixture of f over the
    per-cell weights.
    """
    if bundle is None:
        bundle = simulate_relaxed(coeffs, q, config, action_set)
    n, nodes = bundle.x.shape
    steps = nodes - 1
    dt = config.horizon / config.steps
    m1, m2 = _node_moments(bundle)

    weights = relaxed_step_weights(q, config.horizon, config.steps)
    pts = q.action_set.points
    mix_left = np.zeros((n, steps))
    mix_right = np.zeros((n, steps))
    for j in range(pts.size):
        col = weights[:, j]
        if not np.any(col != 0.0):
            continue
        a = float(pts[j])
        fj_left = _full(
            costs.f(bundle.times[:-1], bundle.x[:, :-1], m1[:-1], m2[:-1], a),
            (n, steps),
        )
        fj_right = _full(
            costs.f(bundle.times[1:], bundle.x[:, 1:], m1[1:], m2[1:], a),
            (n, steps),
        )
        mix_left += col * fj_left
        mix_right += col * fj_right
    running_pp = _running_from_node_values(mix_left, mix_right, dt)
    reflection_pp, terminal_pp = _reflection_terminal(costs, bundle, m1, m2)
    return _assemble(running_pp, reflection_pp, terminal_pp)


def check_cost_growth_bound(
    costs: CostSet,
    action_set: ActionSet,
    horizon: float,
    samples: int = 1000,
    seed: int = 0,
):
    """Sampled probe of |f| + |c| + |g| <= C3 (1 + x^2 + m2)."""
    from .dynamics import _probe_points

    c3 = costs.declared_growth_c3
    if c3 is None:
        return True, None
    t, x, m1, m2, a = _probe_points(action_set, horizon, samples, seed)
    for i in range(samples):
        fv = abs(float(np.asarray(costs.f(t[i], x[i], m1[i], m2[i], a[i]))))
        cv = abs(float(np.asarray(costs.c(t[i], x[i], m1[i], m2[i]))))
        gv = abs(float(np.asarray(costs.g(x[i], m1[i], m2[i]))))
        lhs = fv + cv + gv
        rhs = c3 * (1.0 + x[i] * x[i] + m2[i])
        if not (lhs <= rhs) or not np.isfinite(lhs):
            return False, {"t": t[i], "x": x[i], "m1": m1[i], "m2": m2[i],
                           "a": float(a[i]), "lhs": lhs, "rhs": rhs}
    return True, None
